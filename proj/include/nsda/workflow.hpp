#pragma once

#include <filesystem>
#include <functional>
#include <string>

#include "nsda/analysis.hpp"
#include "nsda/dynamics.hpp"
#include "nsda/imageio.hpp"

namespace nsda {

/// Per-step progress: phase is "backward" or "forward", `done` counts steps
/// completed across both phases out of `total`.
using ProgressFn = std::function<void(const std::string& phase, const NormRow& row, int done, int total)>;

struct AssimilationResult {
    FlowState desired_T;
    FlowState computed_0;
    FlowState evolved_T;
    Trajectory backward;
    Trajectory forward;
    AssimilationReport report;
};

/// psi, u, v and omega = -lap(psi) of a given stream function.
FlowState flow_from_stream(const ScalarField& psi, double time);

/// MarchConfig fields as a JSON object (for reports).
nlohmann::json to_json(const MarchConfig& cfg);

/// March the vorticity of psi_T backward to t = 0, then forward again to T.
/// cfg.direction is ignored. A DivergenceError from either phase propagates;
/// its partial trajectory belongs to the phase that failed.
AssimilationResult assimilate(const ScalarField& psi_T, const MarchConfig& cfg, const ProgressFn& progress = {});

/// Rows as CSV: phase,step,time,psi,u,v,omega,u_max
std::string norms_csv_header();
std::string norms_csv_row(const std::string& phase, const NormRow& r);
std::string norms_csv(const AssimilationResult& r);

/// desiredT/computed0/evolvedT as .png and .pgm (psi, rendered with `mode`),
/// report.json, report.txt and norms.csv.
void write_assimilation_artifacts(const AssimilationResult& r, const std::filesystem::path& out_dir,
                                  ExportMode mode = ExportMode::absolute);

}  // namespace nsda
