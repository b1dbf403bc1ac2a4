#include "ecolab/partition.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace ecolab {

namespace {

int max_label(std::span<const int> labels) {
    int m = -1;
    for (int l : labels) m = std::max(m, l);
    return m;
}

std::string labels_to_string(std::span<const int> labels) {
    std::ostringstream os;
    for (size_t i = 0; i < labels.size(); ++i) {
        if (i) os << ',';
        os << labels[i];
    }
    return os.str();
}

}  // namespace

Partition::Partition(std::vector<int> labels) : labels_(std::move(labels)) {
    if (labels_.empty()) {
        throw std::invalid_argument("partition: empty label sequence");
    }
    if (!is_canonical(labels_)) {
        const Partition fixed = canonical(labels_);
        throw std::invalid_argument(
            "partition: labels not in restricted-growth canonical form "
            "(canonical form: " + fixed.to_string() + ")");
    }
    cell_count_ = max_label(labels_) + 1;
}

bool Partition::is_canonical(std::span<const int> labels) {
    if (labels.empty() || labels[0] != 0) return false;
    int seen_max = 0;
    for (size_t i = 1; i < labels.size(); ++i) {
        if (labels[i] < 0 || labels[i] > seen_max + 1) return false;
        seen_max = std::max(seen_max, labels[i]);
    }
    return true;
}

Partition Partition::canonical(std::span<const int> labels) {
    std::map<int, int> relabel;
    std::vector<int> out;
    out.reserve(labels.size());
    for (int l : labels) {
        auto it = relabel.find(l);
        if (it == relabel.end()) {
            it = relabel.emplace(l, static_cast<int>(relabel.size())).first;
        }
        out.push_back(it->second);
    }
    return Partition(std::move(out));
}

Partition Partition::parse(const std::string& text) {
    std::vector<int> labels;
    std::istringstream is(text);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        size_t pos = 0;
        int value = 0;
        try {
            value = std::stoi(tok, &pos);
        } catch (const std::exception&) {
            throw std::invalid_argument("partition: bad label '" + tok + "'");
        }
        if (pos != tok.size() || value < 0) {
            throw std::invalid_argument("partition: bad label '" + tok + "'");
        }
        labels.push_back(value);
    }
    if (labels.empty()) {
        throw std::invalid_argument("partition: empty label sequence");
    }
    return Partition(std::move(labels));
}

Partition Partition::identity(int n) {
    std::vector<int> labels(static_cast<size_t>(n));
    std::iota(labels.begin(), labels.end(), 0);
    return Partition(std::move(labels));
}

Partition Partition::all_merged(int n) {
    return Partition(std::vector<int>(static_cast<size_t>(n), 0));
}

std::vector<std::vector<int>> Partition::cells() const {
    std::vector<std::vector<int>> cells(static_cast<size_t>(cell_count_));
    for (int i = 0; i < size(); ++i) {
        cells[static_cast<size_t>(labels_[static_cast<size_t>(i)])].push_back(i);
    }
    return cells;
}

bool Partition::refines(const Partition& coarser) const {
    if (coarser.size() != size()) {
        throw std::invalid_argument("partition: size mismatch in refines()");
    }
    for (int i = 0; i < size(); ++i) {
        for (int j = i + 1; j < size(); ++j) {
            if (label(i) == label(j) && coarser.label(i) != coarser.label(j)) {
                return false;
            }
        }
    }
    return true;
}

std::string Partition::to_string() const { return labels_to_string(labels_); }

Partition Partition::merge_cells(int cell_a, int cell_b) const {
    if (cell_a == cell_b || cell_a < 0 || cell_b < 0 ||
        cell_a >= cell_count_ || cell_b >= cell_count_) {
        throw std::invalid_argument("partition: invalid merge cells");
    }
    std::vector<int> out(labels_);
    const int keep = std::min(cell_a, cell_b);
    const int drop = std::max(cell_a, cell_b);
    for (int& l : out) {
        if (l == drop) l = keep;
    }
    return canonical(out);
}

Partition Partition::split_cell(int cell, std::span<const int> side_a) const {
    if (cell < 0 || cell >= cell_count_) {
        throw std::invalid_argument("partition: invalid split cell");
    }
    std::vector<char> in_a(labels_.size(), 0);
    for (int w : side_a) {
        if (w < 0 || w >= size() || label(w) != cell) {
            throw std::invalid_argument(
                "partition: split subset not contained in the cell");
        }
        in_a[static_cast<size_t>(w)] = 1;
    }
    size_t a_count = 0;
    size_t cell_size = 0;
    for (int i = 0; i < size(); ++i) {
        if (label(i) == cell) {
            ++cell_size;
            if (in_a[static_cast<size_t>(i)]) ++a_count;
        }
    }
    if (a_count == 0 || a_count == cell_size) {
        throw std::invalid_argument(
            "partition: split subset must be a nonempty proper subset");
    }
    std::vector<int> out(labels_);
    const int fresh = cell_count_;
    for (int i = 0; i < size(); ++i) {
        if (label(i) == cell && !in_a[static_cast<size_t>(i)]) out[static_cast<size_t>(i)] = fresh;
    }
    return canonical(out);
}

std::vector<Partition> Partition::merge_neighbors() const {
    std::vector<Partition> out;
    for (int a = 0; a < cell_count_; ++a) {
        for (int b = a + 1; b < cell_count_; ++b) {
            out.push_back(merge_cells(a, b));
        }
    }
    return out;
}

std::vector<Partition> Partition::split_neighbors() const {
    std::vector<Partition> out;
    const auto cell_members = cells();
    for (int c = 0; c < cell_count_; ++c) {
        const auto& members = cell_members[static_cast<size_t>(c)];
        const size_t s = members.size();
        if (s < 2) continue;
        if (s > 13) {
            throw std::invalid_argument(
                "partition: cell too large to enumerate bipartitions");
        }
        // Fix members[0] on side A to enumerate each bipartition once.
        const std::uint64_t half = 1ull << (s - 1);
        for (std::uint64_t mask = 0; mask + 1 < half; ++mask) {
            std::vector<int> side_a{members[0]};
            for (size_t i = 1; i < s; ++i) {
                if (mask & (1ull << (i - 1))) side_a.push_back(members[i]);
            }
            out.push_back(split_cell(c, side_a));
        }
    }
    return out;
}

std::uint64_t bell_number(int n) {
    if (n < 0 || n > 25) {
        throw std::invalid_argument("bell_number: n out of range [0, 25]");
    }
    // Bell triangle.
    std::vector<std::uint64_t> row{1};
    for (int i = 1; i <= n; ++i) {
        std::vector<std::uint64_t> next(static_cast<size_t>(i) + 1);
        next[0] = row.back();
        for (size_t j = 0; j + 1 < next.size(); ++j) next[j + 1] = next[j] + row[j];
        row = std::move(next);
    }
    return row[0];
}

void for_each_partition(int n, const std::function<bool(const Partition&)>& fn,
                        bool force) {
    if (n < 1) throw std::invalid_argument("for_each_partition: n must be >= 1");
    if (n > 14 && !force) {
        throw std::invalid_argument(
            "for_each_partition: n > 14 exceeds desk scale (B(15) and beyond); "
            "pass force to override");
    }
    std::vector<int> a(static_cast<size_t>(n), 0);
    std::vector<int> b(static_cast<size_t>(n), 0); // b[i] = max(a[0..i-1])
    while (true) {
        if (!fn(Partition(a))) return;
        // Advance to the next restricted-growth string in lex order.
        int i = n - 1;
        while (i > 0 && a[static_cast<size_t>(i)] > b[static_cast<size_t>(i)]) --i;
        if (i == 0) return;
        ++a[static_cast<size_t>(i)];
        for (int j = i + 1; j < n; ++j) {
            a[static_cast<size_t>(j)] = 0;
            b[static_cast<size_t>(j)] = std::max(b[static_cast<size_t>(i)],
                                                 a[static_cast<size_t>(i)]);
            if (j > i + 1) b[static_cast<size_t>(j)] = b[static_cast<size_t>(j - 1)];
        }
    }
}

std::vector<Partition> all_partitions(int n, bool force) {
    std::vector<Partition> out;
    for_each_partition(
        n,
        [&](const Partition& p) {
            out.push_back(p);
            return true;
        },
        force);
    return out;
}

}  // namespace ecolab
