#pragma once

#define LAYERCOMP_VERSION "0.1.0"
