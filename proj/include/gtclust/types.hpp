#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gtclust {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Label vector over T points, with k clusters and every id in [0,k) used.
struct Partition {
    std::vector<int> labels;
    int k = 0;
    std::string source_tag;

    int size() const { return static_cast<int>(labels.size()); }

    /// Throws if a label is out of range or some cluster id is unused.
    void validate() const;
};

inline void Partition::validate() const {
    if (k < 1) throw Error("Partition: k must be >= 1");
    std::vector<char> seen(static_cast<size_t>(k), 0);
    for (int l : labels) {
        if (l < 0 || l >= k) throw Error("Partition: label out of range [0,k)");
        seen[static_cast<size_t>(l)] = 1;
    }
    for (int c = 0; c < k; ++c)
        if (!seen[static_cast<size_t>(c)]) throw Error("Partition: empty cluster id " + std::to_string(c));
}

/// splitmix64 step; used to derive independent per-run seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace gtclust
