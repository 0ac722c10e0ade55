#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "noma/harness.hpp"

namespace noma::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 2,
    kExitIo = 3,
    kExitInternal = 4,
};

struct FigureConfig {
    std::string name;  ///< e.g. "fig3a"
    ExperimentConfig config;
};

/// The ten bundled sweeps (fig2a-c, fig3a-c, fig4a-c, fig5). `scale` multiplies
/// the per-point frame budget and error target; both stay at least 1.
std::vector<FigureConfig> figure_configs(double scale = 1.0, std::uint64_t seed = 1);

/// Entry point shared by the binary and the tests. argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace noma::cli
