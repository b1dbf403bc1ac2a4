#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ecolab {

/// A set partition of {0, ..., n-1} in restricted-growth canonical form:
/// labels[0] == 0 and labels[i] <= 1 + max(labels[0..i-1]). The first
/// occurrence of each cell index is in increasing order, so equal
/// partitions have identical label sequences.
class Partition {
  public:
    // Requires canonical restricted-growth labels; throws std::invalid_argument
    // otherwise (use canonical() to relabel arbitrary cell assignments).
    explicit Partition(std::vector<int> labels);

    static bool is_canonical(std::span<const int> labels);
    static Partition canonical(std::span<const int> labels);

    // Parses "0,0,1". Rejects non-canonical input and suggests the canonical
    // relabeling in the exception message.
    static Partition parse(const std::string& text);

    static Partition identity(int n);   // every world its own cell
    static Partition all_merged(int n); // single cell

    int size() const { return static_cast<int>(labels_.size()); }
    int cell_count() const { return cell_count_; }
    const std::vector<int>& labels() const { return labels_; }
    int label(int i) const { return labels_[static_cast<size_t>(i)]; }

    // Member indices per cell, cells ordered by label.
    std::vector<std::vector<int>> cells() const;

    // True when every cell of *this is contained in a cell of `coarser`.
    bool refines(const Partition& coarser) const;

    std::string to_string() const; // "0,0,1"

    // One-step lattice moves (always canonical results).
    Partition merge_cells(int cell_a, int cell_b) const;
    // `side_a` lists world indices forming a nonempty proper subset of `cell`.
    Partition split_cell(int cell, std::span<const int> side_a) const;
    std::vector<Partition> merge_neighbors() const;
    std::vector<Partition> split_neighbors() const;

    bool operator==(const Partition& other) const {
        return labels_ == other.labels_;
    }
    bool operator!=(const Partition& other) const { return !(*this == other); }
    bool operator<(const Partition& other) const {
        return labels_ < other.labels_;
    }

  private:
    std::vector<int> labels_;
    int cell_count_ = 0;
};

/// Bell number B(n) for n <= 25 (B(25) still fits in 64 bits).
std::uint64_t bell_number(int n);

/// Calls `fn` once per set partition of {0..n-1} in restricted-growth
/// lexicographic order. Guarded to n <= 14 (B(14) ~ 1.9e8) unless `force`.
/// `fn` returns false to stop early.
void for_each_partition(int n, const std::function<bool(const Partition&)>& fn,
                        bool force = false);

/// Materializes all partitions (small n only; same guard as above).
std::vector<Partition> all_partitions(int n, bool force = false);

}  // namespace ecolab
