#pragma once

#include "gtclust/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gtclust {

/// 4D gridded data [variable, time, lon, lat]. Missing cells are NaN.
struct SpatioTemporalGrid {
    int n = 0;  // variables
    int T = 0;  // time steps
    int L = 0;  // longitudes
    int W = 0;  // latitudes
    std::vector<std::string> variable_names;
    std::vector<double> values;  // flat, index ((v*T + t)*L + l)*W + w

    double& at(int v, int t, int l, int w) {
        return values[static_cast<size_t>(((v * T + t) * L + l) * W + w)];
    }
    double at(int v, int t, int l, int w) const {
        return values[static_cast<size_t>(((v * T + t) * L + l) * W + w)];
    }
    bool has_missing() const;
    void validate() const;
};

/// T x F design matrix; rows are time steps. mins/maxs are filled by
/// minmax_normalize and empty before that.
struct FeatureMatrix {
    Matrix data;
    std::vector<double> feature_mins;
    std::vector<double> feature_maxs;

    int rows() const { return static_cast<int>(data.rows()); }
    int cols() const { return static_cast<int>(data.cols()); }
};

enum class RegimeLayout { Contiguous, Interleaved };

struct SyntheticSpec {
    int T = 0;
    int F = 0;
    int k_true = 0;
    double separation = 1.0;
    double noise_sigma = 0.0;
    RegimeLayout regime_layout = RegimeLayout::Contiguous;
    std::uint64_t seed = 0;
};

enum class InputFormat { GridCsv, Csv2d };
enum class MeanScope { PerVariable, WholeDataset };

/// Parses the grid-csv format (header `#GRID n= T= L= W=`, names line,
/// one data line per (variable,time) pair). A plain 2D CSV loads as an
/// (F, T, 1, 1) grid so the rest of the pipeline is format-agnostic.
SpatioTemporalGrid load_grid(const std::string& path, InputFormat format);

/// Canonical serialization of a grid; load_grid(write_grid(g)) round-trips
/// byte-identically. Floats use 17 significant digits, missing cells `NA`.
void write_grid(const SpatioTemporalGrid& grid, const std::string& path);

/// Replaces each NaN cell by the mean of observed values, per variable by
/// default or over the whole dataset.
SpatioTemporalGrid impute_mean(const SpatioTemporalGrid& grid,
                               MeanScope scope = MeanScope::PerVariable);

/// Row t = concat over variables (outer), then lon, then lat (inner) of
/// grid[., t, ., .]; column index = (v*L + l)*W + w.
FeatureMatrix reshape_to_2d(const SpatioTemporalGrid& grid);

/// Per-column x' = (x - min)/(max - min); constant columns map to 0.
FeatureMatrix minmax_normalize(const FeatureMatrix& m);

/// Seeded blob generator: k_true centroids at pairwise distance >=
/// separation, one regime per time step, Gaussian noise.
std::pair<FeatureMatrix, Partition> generate_synthetic(const SyntheticSpec& spec);

}  // namespace gtclust
