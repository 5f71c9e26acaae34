#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pmp/error.hpp"
#include "pmp/grid.hpp"

namespace pmp {

namespace detail {

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::vector<double> read_numbers(std::istream& in, const std::string& key, std::size_t n) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("pmd: missing '" + key + "' line");
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word != key) throw InvalidArgument("pmd: expected '" + key + "', got '" + word + "'");
    std::vector<double> out;
    double v;
    while (ls >> v) out.push_back(v);
    if (!ls.eof()) throw InvalidArgument("pmd: malformed number on '" + key + "' line");
    if (n != 0 && out.size() != n)
        throw InvalidArgument("pmd: '" + key + "' has " + std::to_string(out.size()) +
                              " values, expected " + std::to_string(n));
    return out;
}

}  // namespace detail

/**
 * Text dump, one keyword line each:
 *
 *     nx <n>
 *     counts <N_1> ... <N_n>
 *     basis <B row-major>
 *     center <c>
 *     weights <w_0> ... <w_{N-1}>
 *
 * Reals are written with 17 significant digits, so reading back is exact.
 */
inline void write_pmd(std::ostream& out, const PointMassDensity& pmd) {
    const auto& g = pmd.grid();
    const auto n = static_cast<Eigen::Index>(g.dimension());
    out << "nx " << n << "\ncounts";
    for (auto c : g.counts()) out << ' ' << c;
    out << "\nbasis";
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) out << ' ' << detail::format_double(g.basis()(r, c));
    out << "\ncenter";
    for (Eigen::Index r = 0; r < n; ++r) out << ' ' << detail::format_double(g.center()[r]);
    out << "\nweights";
    for (auto w : pmd.weights()) out << ' ' << detail::format_double(w);
    out << '\n';
}

inline PointMassDensity read_pmd(std::istream& in) {
    const auto nx = detail::read_numbers(in, "nx", 1);
    if (nx[0] < 1 || nx[0] != static_cast<double>(static_cast<std::size_t>(nx[0])))
        throw InvalidArgument("pmd: nx must be a positive integer");
    const auto n = static_cast<std::size_t>(nx[0]);
    const auto raw_counts = detail::read_numbers(in, "counts", n);
    Counts counts;
    for (auto c : raw_counts) {
        if (c < 1 || c != static_cast<double>(static_cast<std::size_t>(c)))
            throw InvalidArgument("pmd: counts must be positive integers");
        counts.push_back(static_cast<std::size_t>(c));
    }
    const auto b = detail::read_numbers(in, "basis", n * n);
    const auto c = detail::read_numbers(in, "center", n);
    const auto w = detail::read_numbers(in, "weights", element_count(counts));
    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd B(ni, ni);
    for (Eigen::Index r = 0; r < ni; ++r)
        for (Eigen::Index k = 0; k < ni; ++k) B(r, k) = b[static_cast<std::size_t>(r * ni + k)];
    return PointMassDensity(LatticeGrid(std::move(counts), B, Eigen::Map<const Eigen::VectorXd>(c.data(), ni)), w);
}

inline void save_pmd(const std::string& path, const PointMassDensity& pmd) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path + " for writing");
    write_pmd(out, pmd);
    if (!out) throw Error("failed writing " + path);
}

inline PointMassDensity load_pmd(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    return read_pmd(in);
}

}  // namespace pmp
