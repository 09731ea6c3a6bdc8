#pragma once

// Persistent outputs: CSV files with self-describing headers (17 significant
// digits so reruns are byte-comparable) and a JSON manifest carrying enough
// provenance to reproduce a run exactly. No timestamps anywhere.

#include <filesystem>
#include <string>

#include "njpo/config.hpp"
#include "njpo/dynamics.hpp"
#include "njpo/experiments.hpp"
#include "njpo/stats.hpp"

namespace njpo {

/// FNV-1a 64-bit hash, used as the provenance tag in CSV headers.
std::uint64_t fnv1a64(const std::string& data);

/// Canonical one-line description of a trajectory's provenance.
std::string provenance_string(const Provenance& prov);

/// Columns: t, re_a3, im_a3, re_a4, im_a4.
void write_trajectory_csv(const Trajectory& traj, const std::filesystem::path& path);

void write_psd_csv(const SpectralDensity& psd, const std::string& description,
                   std::uint64_t provenance_hash, const std::filesystem::path& path);

void write_histogram_csv(const Histogram2D& hist, const std::string& description,
                         std::uint64_t provenance_hash,
                         const std::filesystem::path& path);

/// Aggregate table: coordinate columns then value columns, one row per grid
/// point; failed points carry their error text in the trailing column.
void write_experiment_csv(const ExperimentResult& result,
                          const std::filesystem::path& path);

/// Manifest with the full configuration text, seed, subcommand and the list
/// of artifacts written.
void write_manifest(const RunConfig& cfg, const std::string& subcommand,
                    const std::vector<std::string>& artifacts,
                    const std::filesystem::path& path);

}  // namespace njpo
