#include <catch_amalgamated.hpp>

#include <cmath>

#include "layercomp/linear.hpp"
#include "layercomp/rng.hpp"

using namespace layercomp;

namespace {

// Random matrix safely inside the representable range of pv, no -0.
MatD random_in_range(Rng& rng, std::size_t rows, std::size_t cols,
                     const PartitioningVector& pv) {
    const double limit = std::ldexp(1.0, pv.p0());
    MatD m(rows, cols);
    for (auto& v : m.data()) {
        do {
            v = rng.uniform(-limit, limit);
        } while (!(std::fabs(v) < limit) || (v == 0.0 && std::signbit(v)));
    }
    return m;
}

std::vector<double> column(const MatD& m) {
    std::vector<double> v(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) v[r] = m(r, 0);
    return v;
}

}  // namespace

TEST_CASE("scalar product refined over four resolutions") {
    // alpha = -1.625, beta = 13.125 under P=[1,-1,-3], Q=[4,0,-3].
    MatD w(1, 1);
    w(0, 0) = -1.625;
    LayeredLinearJob job(w, std::vector<double>{13.125},
                         PartitioningVector({1, -1, -3}),
                         PartitioningVector({4, 0, -3}));
    REQUIRE(job.total_resolutions() == 4);
    const double expect_abs[] = {19.5, 21.125, 21.3125, 21.328125};
    for (int r = 0; r < 4; ++r) {
        job.upgrade();
        CHECK(std::fabs(job.omega()[0]) == expect_abs[r]);
    }
    CHECK(job.omega()[0] == -1.625 * 13.125);  // sign carried by components
    CHECK(job.complete());
    CHECK_THROWS_AS(job.upgrade(), std::logic_error);
}

TEST_CASE("pathologically wide vector pairs are rejected up front") {
    const PartitioningVector wide({62, 0});
    MatD w(1, 8, 1.0);
    const std::vector<double> x(8, 1.0);
    CHECK_THROWS_AS(LayeredLinearJob(w, x, wide, wide), std::invalid_argument);
    // a scalar job at the same width still fits the accumulator
    MatD w1(1, 1, 1.0);
    CHECK_NOTHROW(LayeredLinearJob(w1, std::vector<double>{1.0}, wide, wide));
}

TEST_CASE("identity product completes in one step") {
    MatD w(1, 1);
    w(0, 0) = 1.0;
    LayeredLinearJob job(w, std::vector<double>{1.0},
                         PartitioningVector({1, 0}), PartitioningVector({1, 0}));
    job.upgrade();
    CHECK(job.omega()[0] == 1.0);
    CHECK(job.complete());
}

TEST_CASE("final resolution equals the quantized one-shot product exactly") {
    Rng rng(10);
    const auto pv = PartitioningVector({8, 4, 0});
    const MatD w = random_in_range(rng, 3, 3, pv);
    const MatD x = random_in_range(rng, 3, 1, pv);
    LayeredLinearJob job(w, column(x), pv, pv);
    while (!job.complete()) job.upgrade();
    const auto oracle = quantized_product_scaled(job.w_layers(), job.x_layers());
    REQUIRE(oracle.size() == job.omega_scaled().size());
    for (std::size_t k = 0; k < oracle.size(); ++k) {
        CHECK(job.omega_scaled()[k] == oracle[k]);
    }
}

TEST_CASE("refinement additivity follows the schedule") {
    Rng rng(11);
    const auto pw = PartitioningVector({2, 0, -2});
    const auto px = PartitioningVector({3, 1, -1});
    const MatD w = random_in_range(rng, 4, 2, pw);
    const MatD x = random_in_range(rng, 2, 1, px);
    LayeredLinearJob job(w, column(x), pw, px);
    auto prev = job.omega();
    while (!job.complete()) {
        const int r = job.resolution();
        job.upgrade();
        const auto cur = job.omega();
        const auto [i, j] = job.schedule().order[static_cast<std::size_t>(r)];
        const auto& wc = job.w_layers().components[static_cast<std::size_t>(i - 1)];
        const auto& xc = job.x_layers().components[static_cast<std::size_t>(j - 1)];
        const double scale = std::ldexp(
            1.0, job.schedule().exponent_sums[static_cast<std::size_t>(r)]);
        for (std::size_t row = 0; row < w.rows(); ++row) {
            double step = 0.0;
            for (std::size_t c = 0; c < w.cols(); ++c) {
                step += static_cast<double>(wc(row, c)) * static_cast<double>(xc(c, 0));
            }
            CHECK(cur[row] - prev[row] == step * scale);
        }
        prev = cur;
    }
}

TEST_CASE("delta_bound worked values") {
    const auto p = PartitioningVector({1, -1, -3});
    const auto q = PartitioningVector({4, 0, -3});
    // delta = 2^-2 + 2^1 + 2^-6
    const double delta = 0.25 + 2.0 + 0.015625;
    CHECK(delta_bound(p, q, 4, 1) == delta);  // r = R: tail term vanishes
    const auto pv = PartitioningVector({8, 4, 0});
    CHECK(delta_bound(pv, pv, 1, 1) == 513.0 + 3.0 * 256.0);
    CHECK(delta_bound(pv, pv, 4, 1) == 513.0);
    for (int r = 2; r <= 4; ++r) {
        CHECK(delta_bound(pv, pv, r, 1) <= delta_bound(pv, pv, r - 1, 1));
    }
}

TEST_CASE("bound holds at every resolution for unit-spaced vectors") {
    Rng rng(12);
    const auto pw = PartitioningVector({2, 1, 0, -1});
    const auto px = PartitioningVector({4, 3, 2, 1});
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t m = 1 + rng.below(5);
        const std::size_t n = 1 + rng.below(5);
        const MatD w = random_in_range(rng, m, n, pw);
        const MatD x = random_in_range(rng, n, 1, px);
        const auto exact = matvec(w, column(x));
        LayeredLinearJob job(w, column(x), pw, px);
        while (!job.complete()) {
            job.upgrade();
            const double bound = delta_bound(pw, px, job.resolution(), n);
            const auto om = job.omega();
            for (std::size_t k = 0; k < om.size(); ++k) {
                CHECK(std::fabs(exact[k] - om[k]) < bound);
            }
        }
    }
}

TEST_CASE("final-resolution bound holds for wide-slice vectors too") {
    Rng rng(16);
    const auto pw = PartitioningVector({8, 4, 0});
    const auto px = PartitioningVector({4, 1, -2});
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.below(6);
        const MatD w = random_in_range(rng, 1 + rng.below(6), n, pw);
        const MatD x = random_in_range(rng, n, 1, px);
        const auto exact = matvec(w, column(x));
        LayeredLinearJob job(w, column(x), pw, px);
        while (!job.complete()) job.upgrade();
        const double bound = delta_bound(pw, px, job.total_resolutions(), n);
        const auto om = job.omega();
        for (std::size_t k = 0; k < om.size(); ++k) {
            CHECK(std::fabs(exact[k] - om[k]) < bound);
        }
    }
}

TEST_CASE("layered cost worked values and conservation") {
    const auto pv = PartitioningVector({8, 4, 0});
    for (int r = 1; r <= 4; ++r) CHECK(layered_cost(pv, pv, r, 1, 1) == 16);
    CHECK(one_shot_cost(pv, pv, 1, 1) == 64);

    const auto pa = PartitioningVector({4, 0, -3});
    const auto pb = PartitioningVector({1, -1, -3});
    const std::int64_t expect[] = {8, 8, 6, 6};
    std::int64_t total = 0;
    for (int r = 1; r <= 4; ++r) {
        CHECK(layered_cost(pa, pb, r, 1, 1) == expect[r - 1]);
        total += layered_cost(pa, pb, r, 1, 1);
    }
    CHECK(total == 28);
    CHECK(total == one_shot_cost(pa, pb, 1, 1));

    // depth 1: the only layer carries the one-shot cost
    const auto p1 = PartitioningVector({5, -2});
    CHECK(layered_cost(p1, p1, 1, 3, 7) == one_shot_cost(p1, p1, 3, 7));
}

TEST_CASE("cost conservation over random vector pairs") {
    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 1 + static_cast<int>(rng.below(4));
        auto draw = [&] {
            std::vector<int> e;
            int cur = static_cast<int>(rng.below(10)) - 2;
            e.push_back(cur);
            for (int i = 0; i < d; ++i) {
                cur -= 1 + static_cast<int>(rng.below(5));
                e.push_back(cur);
            }
            return PartitioningVector(e);
        };
        const auto pw = draw();
        const auto px = draw();
        const std::size_t u = 1 + rng.below(6), v = 1 + rng.below(6);
        std::int64_t total = 0;
        for (int r = 1; r <= d * d; ++r) total += layered_cost(pw, px, r, u, v);
        CHECK(total == one_shot_cost(pw, px, u, v));
    }
}

TEST_CASE("affine extension") {
    SECTION("worked 1x1") {
        MatD w(1, 1);
        w(0, 0) = 2.0;
        const auto [wx, xx] = affine_extend(w, std::vector<double>{3.0},
                                            std::vector<double>{5.0});
        CHECK(matvec(wx, xx)[0] == 13.0);
    }
    SECTION("zero bias reduces to the plain product") {
        Rng rng(14);
        MatD w(3, 2);
        for (auto& v : w.data()) v = rng.uniform(-1, 1);
        const std::vector<double> b{0.0, 0.0, 0.0};
        const std::vector<double> x{0.5, -0.25};
        const auto [wx, xx] = affine_extend(w, b, x);
        const auto direct = matvec(w, x);
        const auto extended = matvec(wx, xx);
        for (std::size_t k = 0; k < direct.size(); ++k) {
            CHECK(extended[k] == direct[k]);
        }
    }
    SECTION("random affine maps agree elementwise") {
        Rng rng(15);
        MatD w(3, 2);
        std::vector<double> b(3), x(2);
        for (auto& v : w.data()) v = rng.uniform(-2, 2);
        for (auto& v : b) v = rng.uniform(-2, 2);
        for (auto& v : x) v = rng.uniform(-2, 2);
        const auto [wx, xx] = affine_extend(w, b, x);
        const auto got = matvec(wx, xx);
        const auto wxv = matvec(w, x);
        for (std::size_t k = 0; k < b.size(); ++k) {
            CHECK(got[k] == wxv[k] + b[k]);
        }
    }
    SECTION("shape mismatch") {
        MatD w(2, 2);
        CHECK_THROWS_AS(affine_extend(w, std::vector<double>{1.0},
                                      std::vector<double>{1.0, 2.0}),
                        std::invalid_argument);
    }
}
