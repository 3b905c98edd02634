// layercomp: successive-refinement computation toolkit.
//
// Subcommands: partition, matmul-layered, nn-eval, bounds, simulate, train,
// adaptive. Every run is seeded (--seed, else LAYERCOMP_SEED, else 1) and
// file outputs are accompanied by a JSON run manifest.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "layercomp/layercomp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace layercomp;

namespace {

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("LAYERCOMP_SEED")) {
        return std::strtoull(env, nullptr, 10);
    }
    return 1;
}

struct Manifest {
    std::string subcommand;
    std::map<std::string, std::string> config;
    std::uint64_t seed = 0;
    std::vector<std::string> outputs;

    void write(const fs::path& dir) const {
        json j;
        j["subcommand"] = subcommand;
        j["config"] = config;
        j["seed"] = seed;
        j["version"] = LAYERCOMP_VERSION;
        j["outputs"] = outputs;
        std::ofstream out(dir / "manifest.json");
        out << j.dump(2) << "\n";
    }
};

std::vector<double> column_of(const MatD& m) {
    if (m.cols() != 1 && m.rows() != 1) {
        throw std::runtime_error("expected a vector (one row or one column)");
    }
    std::vector<double> v;
    if (m.cols() == 1) {
        for (std::size_t r = 0; r < m.rows(); ++r) v.push_back(m(r, 0));
    } else {
        for (std::size_t c = 0; c < m.cols(); ++c) v.push_back(m(0, c));
    }
    return v;
}

// Flat key=value config with '#' comments; later flags override.
std::map<std::string, std::string> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\r')) {
            line.pop_back();
        }
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw std::runtime_error("config line missing '=': " + line);
        }
        std::string key = line.substr(0, eq);
        std::string val = line.substr(eq + 1);
        while (!key.empty() && key.back() == ' ') key.pop_back();
        while (!val.empty() && val.front() == ' ') val.erase(val.begin());
        kv[key] = val;
    }
    return kv;
}

int run_partition(double value, const std::string& pv_csv) {
    const auto pv = PartitioningVector::parse(pv_csv);
    const auto lm = partition(value, pv);
    int sign = 0;
    for (const auto& comp : lm.components) {
        if (comp(0, 0) != 0) {
            sign = comp(0, 0) > 0 ? 1 : -1;
            break;
        }
    }
    std::cout << "value " << format_number(value) << "\n";
    std::cout << "pv " << pv.to_string() << "\n";
    std::cout << "sign " << (sign == 0 ? 1 : sign) << "\n";
    std::cout << "components ";
    for (int i = 0; i < lm.depth(); ++i) {
        std::cout << (i ? "," : "")
                  << std::llabs(lm.components[static_cast<std::size_t>(i)](0, 0));
    }
    std::cout << "\n";
    std::cout << "reconstruction "
              << format_number(lm.reconstruct()(0, 0)) << "\n";
    return 0;
}

int run_bounds(const std::string& pw_csv, const std::string& px_csv,
               std::size_t n, const std::string& out) {
    const auto pw = PartitioningVector::parse(pw_csv);
    const auto px = PartitioningVector::parse(px_csv);
    const auto sched = make_schedule(pw, px);
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"r", "pair_i", "pair_j", "exponent_sum", "delta_bound",
                    "layered_cost"});
    for (int r = 1; r <= sched.size(); ++r) {
        const auto [i, j] = sched.order[static_cast<std::size_t>(r - 1)];
        rows.push_back({std::to_string(r), std::to_string(i), std::to_string(j),
                        std::to_string(sched.exponent_sums[static_cast<std::size_t>(r - 1)]),
                        format_number(delta_bound(pw, px, r, n)),
                        std::to_string(layered_cost(pw, px, r, 1, 1))});
    }
    if (out.empty()) {
        for (const auto& row : rows) {
            for (std::size_t k = 0; k < row.size(); ++k) {
                std::cout << (k ? "," : "") << row[k];
            }
            std::cout << "\n";
        }
        std::cout << "one_shot_cost," << one_shot_cost(pw, px, 1, 1) << "\n";
    } else {
        CsvWriter w(out);
        for (const auto& row : rows) w.row(row);
    }
    return 0;
}

int run_matmul(const std::string& w_path, const std::string& x_path,
               const std::string& pw_csv, const std::string& px_csv,
               const std::string& out_dir, std::uint64_t seed) {
    const auto w = read_csv_matrix(w_path);
    const auto x = column_of(read_csv_matrix(x_path));
    const auto pw = PartitioningVector::parse(pw_csv);
    const auto px = PartitioningVector::parse(px_csv);

    fs::create_directories(out_dir);
    LayeredLinearJob job(w, x, pw, px);
    const auto exact = matvec(w, x);

    CsvWriter omega_csv((fs::path(out_dir) / "omega.csv").string());
    {
        std::vector<std::string> head{"r"};
        for (std::size_t k = 0; k < exact.size(); ++k) {
            head.push_back("omega_" + std::to_string(k));
        }
        omega_csv.row(head);
    }
    CsvWriter err_csv((fs::path(out_dir) / "errors.csv").string());
    err_csv.row({"r", "max_abs_error", "delta_bound"});

    while (!job.complete()) {
        job.upgrade();
        const int r = job.resolution();
        const auto om = job.omega();
        std::vector<std::string> row{std::to_string(r)};
        double worst = 0.0;
        for (std::size_t k = 0; k < om.size(); ++k) {
            row.push_back(format_number(om[k]));
            worst = std::max(worst, std::fabs(exact[k] - om[k]));
        }
        omega_csv.row(row);
        err_csv.row({std::to_string(r), format_number(worst),
                     format_number(delta_bound(pw, px, r, w.cols()))});
    }

    Manifest man{"matmul-layered",
                 {{"w", w_path}, {"x", x_path}, {"pw", pw.to_string()},
                  {"px", px.to_string()}},
                 seed,
                 {"omega.csv", "errors.csv"}};
    man.write(out_dir);
    return 0;
}

int run_nn_eval(const std::string& model_path, const std::string& input_path,
                const std::string& px_csv, const std::string& pw_spec, int r,
                int h_min, const std::string& out_dir, std::uint64_t seed) {
    const auto model = load_nnw1(model_path);
    const auto x = column_of(read_csv_matrix(input_path));

    PartitioningVector px = px_csv.empty()
        ? PartitioningVector([&] {
              std::vector<int> e;
              for (int i = 0; i <= r; ++i) e.push_back(1 - i);
              return e;
          }())
        : PartitioningVector::parse(px_csv);
    std::vector<PartitioningVector> pw;
    if (pw_spec == "auto") {
        pw = choose_partitioning(model, px.depth());
    } else {
        for (const auto& part : split(pw_spec, ';')) {
            pw.push_back(PartitioningVector::parse(part));
        }
    }

    fs::create_directories(out_dir);
    LayeredPlan plan(model, px, pw, h_min);
    LayeredEvaluator eval(plan, x);

    CsvWriter out_csv((fs::path(out_dir) / "outputs.csv").string());
    {
        std::vector<std::string> head{"r"};
        for (std::size_t k = 0; k < model.widths().back(); ++k) {
            head.push_back("omega_" + std::to_string(k));
        }
        out_csv.row(head);
    }
    while (!eval.complete()) {
        const auto om = eval.upgrade();
        std::vector<std::string> row{std::to_string(eval.resolution())};
        for (double v : om) row.push_back(format_number(v));
        out_csv.row(row);
    }
    {
        const auto q = quantized_forward(plan, x);
        std::vector<std::string> row{"oneshot"};
        for (double v : q) row.push_back(format_number(v));
        out_csv.row(row);
    }

    Manifest man{"nn-eval",
                 {{"model", model_path}, {"input", input_path},
                  {"px", px.to_string()}, {"pw", pw_spec},
                  {"hmin", std::to_string(h_min)}},
                 seed,
                 {"outputs.csv"}};
    man.write(out_dir);
    return 0;
}

SimConfig sim_config_from(const std::map<std::string, std::string>& kv) {
    SimConfig cfg;
    cfg.worker_rates.clear();
    auto get = [&](const std::string& key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };
    if (auto v = get("mu")) {
        for (const auto& cell : split(*v, ',')) {
            cfg.worker_rates.push_back(parse_double(cell));
        }
    }
    if (auto v = get("workers")) {
        if (cfg.worker_rates.size() != static_cast<std::size_t>(std::stol(*v))) {
            throw std::runtime_error("config: workers count disagrees with mu list");
        }
    }
    if (auto v = get("lambda")) cfg.arrival_rate = parse_double(*v);
    if (auto v = get("tasks")) cfg.tasks_per_job = std::stoi(*v);
    if (auto v = get("complexity")) cfg.task_complexity = parse_double(*v);
    if (auto v = get("pw")) cfg.pv_w = PartitioningVector::parse(*v);
    if (auto v = get("px")) cfg.pv_x = PartitioningVector::parse(*v);
    if (auto v = get("deadline")) cfg.deadline = parse_double(*v);
    if (auto v = get("jobs")) cfg.num_jobs = std::stoi(*v);
    if (auto v = get("seed")) cfg.seed = std::strtoull(v->c_str(), nullptr, 10);
    if (auto v = get("redundant")) cfg.redundant_tasks = std::stoi(*v);
    if (cfg.worker_rates.empty()) {
        throw std::runtime_error("config: mu list required");
    }
    return cfg;
}

int run_simulate(const SimConfig& cfg, const std::vector<double>& sweep,
                 const std::string& out_dir) {
    fs::create_directories(out_dir);
    const auto records = simulate(cfg);
    const int resolutions = static_cast<int>(records.front().completion.size());

    {
        CsvWriter w((fs::path(out_dir) / "delays.csv").string());
        std::vector<std::string> head{"job_id", "arrival"};
        for (int r = 1; r <= resolutions; ++r) head.push_back("D" + std::to_string(r));
        head.push_back("terminated");
        w.row(head);
        for (std::size_t j = 0; j < records.size(); ++j) {
            std::vector<std::string> row{std::to_string(j),
                                         format_number(records[j].arrival)};
            for (int r = 1; r <= resolutions; ++r) {
                const auto d = records[j].delay(r);
                row.push_back(d ? format_number(*d) : "");
            }
            row.push_back(records[j].terminated ? "1" : "0");
            w.row(row);
        }
    }

    {
        const auto curve = success_curve(cfg, sweep);
        CsvWriter w((fs::path(out_dir) / "success.csv").string());
        std::vector<std::string> head{"deadline"};
        for (std::size_t r = 1; r <= curve.layered_rates.front().size(); ++r) {
            head.push_back("rate_r" + std::to_string(r));
        }
        head.push_back("rate_oneshot");
        w.row(head);
        for (std::size_t k = 0; k < curve.deadlines.size(); ++k) {
            std::vector<std::string> row{format_number(curve.deadlines[k])};
            for (double rate : curve.layered_rates[k]) {
                row.push_back(format_number(rate));
            }
            row.push_back(format_number(curve.one_shot_rates[k]));
            w.row(row);
        }
    }

    {
        CsvWriter w((fs::path(out_dir) / "lb.csv").string());
        w.row({"r", "lb", "kingman"});
        const double e_ts = 1.0 / pooled_service_rate(cfg);
        for (int r = 1; r <= resolutions; ++r) {
            const double service_share = layered_lb(cfg, r) -
                (one_shot_lb(cfg) - e_ts);
            w.row({std::to_string(r), format_number(service_share),
                   format_number(layered_lb(cfg, r))});
        }
        w.row({"oneshot", format_number(e_ts), format_number(one_shot_lb(cfg))});
    }

    Manifest man{"simulate",
                 {{"lambda", format_number(cfg.arrival_rate)},
                  {"tasks", std::to_string(cfg.tasks_per_job)},
                  {"complexity", format_number(cfg.task_complexity)},
                  {"pw", cfg.pv_w.to_string()}, {"px", cfg.pv_x.to_string()},
                  {"jobs", std::to_string(cfg.num_jobs)},
                  {"deadline", cfg.deadline ? format_number(*cfg.deadline) : "none"}},
                 cfg.seed,
                 {"delays.csv", "success.csv", "lb.csv"}};
    man.write(out_dir);
    return 0;
}

int run_train(const std::string& images, const std::string& labels,
              const TrainConfig& cfg, const std::string& out_path) {
    const auto data = load_idx(images, labels);
    const auto result = train_mlp(data, cfg);
    save_nnw1(result.model, out_path);
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
        std::cout << "epoch " << e << " loss "
                  << format_number(result.epoch_loss[e]) << "\n";
    }
    std::cout << "train accuracy "
              << format_number(binary_accuracy(result.model, data)) << "\n";
    const auto dir = fs::path(out_path).parent_path();
    Manifest man{"train",
                 {{"images", images}, {"labels", labels},
                  {"epochs", std::to_string(cfg.epochs)},
                  {"batch", std::to_string(cfg.batch)},
                  {"lr", format_number(cfg.lr)}},
                 cfg.seed,
                 {fs::path(out_path).filename().string()}};
    man.write(dir.empty() ? fs::path(".") : dir);
    return 0;
}

int run_adaptive(const std::string& model_path, const std::string& images,
                 const std::string& labels, const std::string& zone_csv,
                 int resolutions, int h_min, const std::string& px_csv,
                 const std::string& traces_path,
                 const std::string& metrics_path, std::uint64_t seed) {
    const auto model = load_nnw1(model_path);
    const auto data = load_idx(images, labels);

    GrayZonePolicy policy;
    {
        const auto parts = split(zone_csv, ',');
        if (parts.size() != 2) throw std::runtime_error("zone: expected low,high");
        policy.low = parse_double(parts[0]);
        policy.high = parse_double(parts[1]);
    }
    PartitioningVector px = px_csv.empty()
        ? PartitioningVector([&] {
              std::vector<int> e;
              for (int i = 0; i <= resolutions; ++i) e.push_back(-i);
              return e;
          }())
        : PartitioningVector::parse(px_csv);

    LayeredPlan plan(model, px, choose_partitioning(model, px.depth()), h_min);
    const auto metrics = evaluate_layered(plan, data, policy);

    {
        NnBoundInputs b;
        b.j_max = model.final_map == FinalMap::sigmoid ? 0.25 : 1.0;
        b.h_max = measure_h_max(plan, data);
        b.h_min = h_min;
        b.widths = model.widths();
        b.px = px;
        b.pw = plan.pw;
        b.layers = model.layer_count();
        std::cout << "h_max " << b.h_max << "\n";
        for (int r = 1; r <= plan.resolutions; ++r) {
            std::cout << "r " << r << " delta_bound "
                      << format_number(nn_delta_bound(b, r)) << " cost_gap "
                      << format_number(nn_cost_gap(b, r)) << "\n";
        }
    }

    {
        CsvWriter w(traces_path);
        w.row({"sample_id", "resolutions_used", "final_output", "prediction",
               "label"});
        for (std::size_t i = 0; i < metrics.traces.size(); ++i) {
            const auto& t = metrics.traces[i];
            w.row({std::to_string(i), std::to_string(t.resolutions_used),
                   format_number(t.final_output), std::to_string(t.prediction),
                   std::to_string(t.label)});
        }
    }
    {
        CsvWriter w(metrics_path);
        w.row({"metric", "r", "value"});
        for (int r = 1; r <= plan.resolutions; ++r) {
            w.row({"accuracy", std::to_string(r),
                   format_number(metrics.accuracy[static_cast<std::size_t>(r - 1)])});
            w.row({"auc", std::to_string(r),
                   format_number(metrics.auc[static_cast<std::size_t>(r - 1)])});
        }
        w.row({"accuracy_quantized_oneshot", "", format_number(metrics.quantized_accuracy)});
        w.row({"auc_quantized_oneshot", "", format_number(metrics.quantized_auc)});
        w.row({"accuracy_adaptive", "", format_number(metrics.adaptive_accuracy)});
        w.row({"auc_adaptive", "", format_number(metrics.adaptive_auc)});
        for (std::size_t k = 0; k < metrics.demand.demand.size(); ++k) {
            w.row({"demand", std::to_string(k), format_number(metrics.demand.demand[k])});
        }
        w.row({"unresolved", "", format_number(metrics.demand.unresolved)});
    }

    const auto dir = fs::path(traces_path).parent_path();
    Manifest man{"adaptive",
                 {{"model", model_path}, {"images", images}, {"labels", labels},
                  {"zone", zone_csv}, {"r", std::to_string(resolutions)},
                  {"hmin", std::to_string(h_min)}, {"px", px.to_string()}},
                 seed,
                 {fs::path(traces_path).filename().string(),
                  fs::path(metrics_path).filename().string()}};
    man.write(dir.empty() ? fs::path(".") : dir);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"layered-resolution computation toolkit"};
    app.require_subcommand(1);
    std::optional<std::uint64_t> seed_flag;
    app.add_option("--seed", seed_flag, "seed (fallback: LAYERCOMP_SEED, then 1)");

    // partition
    auto* p_cmd = app.add_subcommand("partition", "bit-plane decompose a scalar");
    double p_value = 0.0;
    std::string p_pv;
    p_cmd->add_option("--value", p_value, "scalar to decompose")->required();
    p_cmd->add_option("--pv", p_pv, "partitioning vector, e.g. 1,-1,-3")->required();

    // bounds
    auto* b_cmd = app.add_subcommand("bounds", "error bound and cost per resolution");
    std::string b_pw, b_px, b_out;
    std::size_t b_n = 1;
    b_cmd->add_option("--pw", b_pw)->required();
    b_cmd->add_option("--px", b_px)->required();
    b_cmd->add_option("--n", b_n, "inner dimension");
    b_cmd->add_option("--out", b_out, "write CSV here instead of stdout");

    // matmul-layered
    auto* m_cmd = app.add_subcommand("matmul-layered",
                                     "matrix-vector product by resolution upgrades");
    std::string m_w, m_x, m_pw, m_px, m_out = "out";
    m_cmd->add_option("--w", m_w, "matrix CSV")->required();
    m_cmd->add_option("--x", m_x, "vector CSV")->required();
    m_cmd->add_option("--pw", m_pw)->required();
    m_cmd->add_option("--px", m_px)->required();
    m_cmd->add_option("--out-dir", m_out);

    // nn-eval
    auto* n_cmd = app.add_subcommand("nn-eval", "layered network evaluation");
    std::string n_model, n_input, n_px, n_pw = "auto", n_out = "out";
    int n_r = 4, n_hmin = -10;
    n_cmd->add_option("--model", n_model, "NNW1 weight file")->required();
    n_cmd->add_option("--input", n_input, "input vector CSV")->required();
    n_cmd->add_option("--px", n_px, "input partitioning (default unit-spaced)");
    n_cmd->add_option("--pw", n_pw, "weight partitionings 'a,b;c,d' or 'auto'");
    n_cmd->add_option("--r", n_r, "resolutions when --px not given");
    n_cmd->add_option("--hmin", n_hmin, "pruning exponent");
    n_cmd->add_option("--out-dir", n_out);

    // simulate
    auto* s_cmd = app.add_subcommand("simulate", "stream of distributed jobs");
    std::string s_config, s_out = "out", s_mu, s_pw, s_px, s_sweep;
    std::optional<double> s_lambda, s_complexity, s_deadline;
    std::optional<int> s_tasks, s_jobs;
    s_cmd->add_option("--config", s_config, "key=value file");
    s_cmd->add_option("--mu", s_mu, "comma-separated worker rates");
    s_cmd->add_option("--lambda", s_lambda);
    s_cmd->add_option("--tasks", s_tasks);
    s_cmd->add_option("--complexity", s_complexity);
    s_cmd->add_option("--pw", s_pw);
    s_cmd->add_option("--px", s_px);
    s_cmd->add_option("--deadline", s_deadline);
    s_cmd->add_option("--jobs", s_jobs);
    s_cmd->add_option("--sweep", s_sweep, "deadlines for success.csv");
    s_cmd->add_option("--out-dir", s_out);

    // train
    auto* t_cmd = app.add_subcommand("train", "train the parity classifier");
    std::string t_images, t_labels, t_out = "model.nnw";
    TrainConfig t_cfg;
    t_cmd->add_option("--images", t_images)->required();
    t_cmd->add_option("--labels", t_labels)->required();
    t_cmd->add_option("--epochs", t_cfg.epochs);
    t_cmd->add_option("--batch", t_cfg.batch);
    t_cmd->add_option("--lr", t_cfg.lr);
    t_cmd->add_option("--out", t_out);

    // adaptive
    auto* a_cmd = app.add_subcommand("adaptive", "gray-zone adaptive inference");
    std::string a_model, a_images, a_labels, a_zone = "0.3,0.6", a_px,
                a_traces = "traces.csv", a_metrics = "metrics.csv";
    int a_r = 4, a_hmin = -4;
    a_cmd->add_option("--model", a_model)->required();
    a_cmd->add_option("--images", a_images)->required();
    a_cmd->add_option("--labels", a_labels)->required();
    a_cmd->add_option("--zone", a_zone, "low,high");
    a_cmd->add_option("--r", a_r);
    a_cmd->add_option("--hmin", a_hmin);
    a_cmd->add_option("--px", a_px, "input partitioning (default 0,-1,..,-r)");
    a_cmd->add_option("--out", a_traces);
    a_cmd->add_option("--metrics", a_metrics);

    if (argc == 1) {
        std::cerr << app.help();
        return 2;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const std::uint64_t seed = resolve_seed(seed_flag);
    try {
        if (*p_cmd) return run_partition(p_value, p_pv);
        if (*b_cmd) return run_bounds(b_pw, b_px, b_n, b_out);
        if (*m_cmd) return run_matmul(m_w, m_x, m_pw, m_px, m_out, seed);
        if (*n_cmd) {
            return run_nn_eval(n_model, n_input, n_px, n_pw, n_r, n_hmin, n_out,
                               seed);
        }
        if (*s_cmd) {
            std::map<std::string, std::string> kv;
            if (!s_config.empty()) kv = read_config_file(s_config);
            if (!s_mu.empty()) kv["mu"] = s_mu;
            if (s_lambda) kv["lambda"] = format_number(*s_lambda);
            if (s_tasks) kv["tasks"] = std::to_string(*s_tasks);
            if (s_complexity) kv["complexity"] = format_number(*s_complexity);
            if (!s_pw.empty()) kv["pw"] = s_pw;
            if (!s_px.empty()) kv["px"] = s_px;
            if (s_deadline) kv["deadline"] = format_number(*s_deadline);
            if (s_jobs) kv["jobs"] = std::to_string(*s_jobs);
            if (!kv.count("seed") || seed_flag) kv["seed"] = std::to_string(seed);
            SimConfig cfg = sim_config_from(kv);
            std::vector<double> sweep;
            if (!s_sweep.empty()) {
                for (const auto& cell : split(s_sweep, ',')) {
                    sweep.push_back(parse_double(cell));
                }
            } else {
                const double top = 2.0 * one_shot_lb(cfg);
                for (int k = 0; k <= 20; ++k) sweep.push_back(top * k / 20.0);
            }
            return run_simulate(cfg, sweep, s_out);
        }
        if (*t_cmd) {
            t_cfg.seed = seed;
            return run_train(t_images, t_labels, t_cfg, t_out);
        }
        if (*a_cmd) {
            return run_adaptive(a_model, a_images, a_labels, a_zone, a_r, a_hmin,
                                a_px, a_traces, a_metrics, seed);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
