#pragma once

#include <string>
#include <vector>

#include "safelqr/analysis.hpp"
#include "safelqr/pipeline.hpp"

namespace safelqr {

/// Creates `dir` (and parents) if needed.
void ensure_dir(const std::string& dir);

void write_text(const std::string& path, const std::string& text);

/// Columns: k, x..., u..., eta..., w...; the final row carries x_T and empty inputs.
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

/// Columns: k, i, j, value (1-based k, 0-based i, j).
void write_response_csv(const std::string& path, const FirResponse& phi);
FirResponse read_response_csv(const std::string& path);

/// key: value lines with status, budgets, costs and certificates.
std::string synthesis_report(const SynthesisResult& result);
void write_search_csv(const std::string& path, const std::vector<SearchPoint>& points);

void write_decay_csv(const std::string& path, const std::vector<DecayRow>& rows);
void write_tradeoff_csv(const std::string& path, const std::vector<TradeoffRow>& rows);

/// Plain matplotlib script next to the CSVs it reads.
enum class PlotKind { Trajectories, Decay, Tradeoff };
void write_plot_script(const std::string& dir, PlotKind kind);

}  // namespace safelqr
