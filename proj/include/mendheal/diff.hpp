// diff.hpp - line-based unified diffs over canonical program text.
//
// Review bundles and search-repair ranking both need a stable, dependency-free
// diff. This is a classic LCS walk; ties prefer deletions so output is
// deterministic. Hunk headers always carry explicit `start,count` pairs.
#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "mendheal/util.hpp"

namespace mendheal {

namespace detail {

struct DiffOp {
    char tag = ' ';  // ' ' keep, '-' delete, '+' add
    size_t a_index = 0;
    size_t b_index = 0;
};

inline std::vector<DiffOp> diff_ops(const std::vector<std::string>& a,
                                    const std::vector<std::string>& b) {
    const size_t n = a.size();
    const size_t m = b.size();
    // lcs[i][j] = LCS length of a[i..] vs b[j..]
    std::vector<std::vector<int>> lcs(n + 1, std::vector<int>(m + 1, 0));
    for (size_t i = n; i-- > 0;)
        for (size_t j = m; j-- > 0;)
            lcs[i][j] = a[i] == b[j] ? lcs[i + 1][j + 1] + 1
                                     : std::max(lcs[i + 1][j], lcs[i][j + 1]);
    std::vector<DiffOp> ops;
    size_t i = 0, j = 0;
    while (i < n && j < m) {
        if (a[i] == b[j]) {
            ops.push_back({' ', i, j});
            ++i, ++j;
        } else if (lcs[i + 1][j] >= lcs[i][j + 1]) {
            ops.push_back({'-', i, 0});
            ++i;
        } else {
            ops.push_back({'+', 0, j});
            ++j;
        }
    }
    for (; i < n; ++i) ops.push_back({'-', i, 0});
    for (; j < m; ++j) ops.push_back({'+', 0, j});
    return ops;
}

}  // namespace detail

// Number of non-common lines between the two texts (deletions + additions).
// Used as the "edit size" when ranking repair candidates.
inline int diff_changed_lines(const std::string& a, const std::string& b) {
    if (a == b) return 0;
    auto ops = detail::diff_ops(split_lines(a), split_lines(b));
    int changed = 0;
    for (const auto& op : ops)
        if (op.tag != ' ') ++changed;
    return changed;
}

// Unified diff with `context` lines of context. Returns "" for equal inputs.
inline std::string unified_diff(const std::string& a, const std::string& b,
                                const std::string& a_label = "a",
                                const std::string& b_label = "b", int context = 3) {
    if (a == b) return "";
    std::vector<std::string> al = split_lines(a);
    std::vector<std::string> bl = split_lines(b);
    std::vector<detail::DiffOp> ops = detail::diff_ops(al, bl);

    // Group change runs into hunks, merging runs whose keep-gap fits inside
    // twice the context width.
    struct Hunk {
        size_t first_op = 0;
        size_t last_op = 0;  // inclusive
    };
    std::vector<Hunk> hunks;
    for (size_t k = 0; k < ops.size(); ++k) {
        if (ops[k].tag == ' ') continue;
        if (!hunks.empty()) {
            size_t gap_start = hunks.back().last_op + 1;
            size_t keeps = 0;
            bool mergeable = true;
            for (size_t g = gap_start; g < k && mergeable; ++g) {
                if (ops[g].tag != ' ') mergeable = false;
                ++keeps;
            }
            if (mergeable && keeps <= static_cast<size_t>(2 * context)) {
                hunks.back().last_op = k;
                continue;
            }
        }
        hunks.push_back({k, k});
    }

    std::string out = "--- " + a_label + "\n+++ " + b_label + "\n";
    // Per-op running line numbers (1-based) on each side.
    std::vector<size_t> a_line(ops.size()), b_line(ops.size());
    {
        size_t la = 0, lb = 0;
        for (size_t k = 0; k < ops.size(); ++k) {
            if (ops[k].tag != '+') ++la;
            if (ops[k].tag != '-') ++lb;
            a_line[k] = la;
            b_line[k] = lb;
        }
    }
    for (const auto& h : hunks) {
        size_t begin = h.first_op - std::min(h.first_op, static_cast<size_t>(context));
        size_t end = std::min(ops.size() - 1, h.last_op + static_cast<size_t>(context));
        size_t a_count = 0, b_count = 0;
        for (size_t k = begin; k <= end; ++k) {
            if (ops[k].tag != '+') ++a_count;
            if (ops[k].tag != '-') ++b_count;
        }
        // Start = line number of the hunk's first line on each side; an empty
        // side anchors at the preceding line (0 at file start).
        size_t a_start = a_count ? 0 : (begin ? a_line[begin - 1] : 0);
        size_t b_start = b_count ? 0 : (begin ? b_line[begin - 1] : 0);
        if (a_count) {
            for (size_t k = begin; k <= end; ++k)
                if (ops[k].tag != '+') {
                    a_start = a_line[k];
                    break;
                }
        }
        if (b_count) {
            for (size_t k = begin; k <= end; ++k)
                if (ops[k].tag != '-') {
                    b_start = b_line[k];
                    break;
                }
        }
        out += "@@ -" + std::to_string(a_start) + "," + std::to_string(a_count) + " +" +
               std::to_string(b_start) + "," + std::to_string(b_count) + " @@\n";
        for (size_t k = begin; k <= end; ++k) {
            out += ops[k].tag;
            out += ops[k].tag == '+' ? bl[ops[k].b_index] : al[ops[k].a_index];
            out += '\n';
        }
    }
    return out;
}

}  // namespace mendheal
