#pragma once

// Dataset ingestion (IDX, CSV), synthetic union-of-subspaces generation,
// per-class partition sampling and normalization.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dsc/error.hpp"
#include "dsc/linalg.hpp"

namespace dsc {

/// D x N data, one point per column.
struct Dataset {
    Matrix x;
    std::optional<Labels> labels;
    std::string name;
    int num_clusters = 0;

    Eigen::Index dim() const { return x.rows(); }
    Eigen::Index size() const { return x.cols(); }
};

struct SyntheticSpec {
    int num_subspaces = 4;
    int subspace_dim = 3;
    int ambient_dim = 30;
    int points_per_subspace = 50;
    double noise_sigma = 0.0;
    bool affine_offset = false;
    bool nonlinear_warp = false;  // elementwise tanh after projection
    bool orthogonal = true;       // mutually orthogonal bases; needs C*d <= D
    std::uint64_t seed = 0;
};

enum class Normalization { none, unit_column, minmax };

inline const char* to_string(Normalization n) {
    switch (n) {
        case Normalization::none: return "none";
        case Normalization::unit_column: return "unit_column";
        case Normalization::minmax: return "minmax";
    }
    return "none";
}

inline Normalization parse_normalization(std::string_view s) {
    if (s == "none") return Normalization::none;
    if (s == "unit_column") return Normalization::unit_column;
    if (s == "minmax") return Normalization::minmax;
    throw ContractError("unknown normalization mode: " + std::string(s));
}

namespace detail {

inline std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(ParseErrorKind::io, "cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& buf, size_t off) {
    return (std::uint32_t(buf[off]) << 24) | (std::uint32_t(buf[off + 1]) << 16) |
           (std::uint32_t(buf[off + 2]) << 8) | std::uint32_t(buf[off + 3]);
}

inline void write_be32(std::ofstream& out, std::uint32_t v) {
    const char bytes[4] = {char((v >> 24) & 0xff), char((v >> 16) & 0xff), char((v >> 8) & 0xff),
                           char(v & 0xff)};
    out.write(bytes, 4);
}

// Map arbitrary integer labels onto 0..K-1 in ascending order of value.
inline int compact_labels(Labels& labels) {
    std::map<int, int> ids;
    for (int l : labels) ids.emplace(l, 0);
    int next = 0;
    for (auto& [k, v] : ids) v = next++;
    for (int& l : labels) l = ids[l];
    return next;
}

}  // namespace detail

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

/// Reads an IDX image/label pair (MNIST layout). Pixels are scaled to [0,1]
/// and each image becomes one column, row-major within the image.
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
    const auto img = detail::read_file(images_path);
    if (img.size() < 16) throw ParseError(ParseErrorKind::truncated, images_path + ": header truncated");
    if (detail::read_be32(img, 0) != kIdxImageMagic)
        throw ParseError(ParseErrorKind::bad_magic, images_path + ": bad image magic number");
    const std::uint32_t n = detail::read_be32(img, 4);
    const std::uint32_t rows = detail::read_be32(img, 8);
    const std::uint32_t cols = detail::read_be32(img, 12);
    const size_t dim = size_t(rows) * cols;
    if (img.size() < 16 + size_t(n) * dim)
        throw ParseError(ParseErrorKind::truncated, images_path + ": pixel data truncated");

    const auto lab = detail::read_file(labels_path);
    if (lab.size() < 8) throw ParseError(ParseErrorKind::truncated, labels_path + ": header truncated");
    if (detail::read_be32(lab, 0) != kIdxLabelMagic)
        throw ParseError(ParseErrorKind::bad_magic, labels_path + ": bad label magic number");
    const std::uint32_t nl = detail::read_be32(lab, 4);
    if (nl != n)
        throw ParseError(ParseErrorKind::count_mismatch,
                         "label count " + std::to_string(nl) + " != image count " + std::to_string(n));
    if (lab.size() < 8 + size_t(nl)) throw ParseError(ParseErrorKind::truncated, labels_path + ": labels truncated");

    Dataset ds;
    ds.name = images_path;
    ds.x.resize(static_cast<Eigen::Index>(dim), n);
    for (std::uint32_t j = 0; j < n; ++j)
        for (size_t i = 0; i < dim; ++i) ds.x(i, j) = img[16 + j * dim + i] / 255.0;
    Labels labels(n);
    int max_label = -1;
    for (std::uint32_t j = 0; j < n; ++j) {
        labels[j] = lab[8 + j];
        max_label = std::max(max_label, labels[j]);
    }
    ds.num_clusters = max_label + 1;
    ds.labels = std::move(labels);
    return ds;
}

/// Writes IDX image and label files; pixels are raw bytes, image-major.
inline void write_idx(const std::string& images_path, const std::string& labels_path,
                      const std::vector<std::uint8_t>& pixels, std::uint32_t rows, std::uint32_t cols,
                      const std::vector<std::uint8_t>& labels) {
    detail::require(pixels.size() == size_t(rows) * cols * labels.size(), "write_idx: pixel count mismatch");
    std::ofstream img(images_path, std::ios::binary);
    std::ofstream lab(labels_path, std::ios::binary);
    if (!img || !lab) throw ParseError(ParseErrorKind::io, "cannot write IDX fixture");
    detail::write_be32(img, kIdxImageMagic);
    detail::write_be32(img, static_cast<std::uint32_t>(labels.size()));
    detail::write_be32(img, rows);
    detail::write_be32(img, cols);
    img.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
    detail::write_be32(lab, kIdxLabelMagic);
    detail::write_be32(lab, static_cast<std::uint32_t>(labels.size()));
    lab.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

/// Header-less numeric CSV, one row per data point. With has_labels the last
/// column is an integer class id; ids are compacted to 0..K-1.
inline Dataset load_csv(const std::string& path, bool has_labels) {
    std::ifstream in(path);
    if (!in) throw ParseError(ParseErrorKind::io, "cannot open " + path);
    std::vector<std::vector<double>> rows;
    Labels labels;
    std::string line;
    long row = 0;
    size_t width = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) {
            ++row;
            continue;
        }
        std::vector<double> vals;
        size_t start = 0;
        while (start <= line.size()) {
            size_t end = line.find(',', start);
            if (end == std::string::npos) end = line.size();
            std::string_view cell(line.data() + start, end - start);
            while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
            while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t')) cell.remove_suffix(1);
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
                throw ParseError(ParseErrorKind::non_numeric,
                                 path + ": non-numeric cell at row " + std::to_string(row), row);
            vals.push_back(v);
            start = end + 1;
        }
        if (width == 0) width = vals.size();
        if (vals.size() != width)
            throw ParseError(ParseErrorKind::ragged_row, path + ": ragged row " + std::to_string(row), row);
        if (has_labels) {
            const double l = vals.back();
            if (l != std::floor(l))
                throw ParseError(ParseErrorKind::non_numeric,
                                 path + ": non-integer label at row " + std::to_string(row), row);
            labels.push_back(static_cast<int>(l));
            vals.pop_back();
        }
        rows.push_back(std::move(vals));
        ++row;
    }
    if (rows.empty() || rows.front().empty()) throw ParseError(ParseErrorKind::empty, path + ": no data");

    Dataset ds;
    ds.name = path;
    const auto d = static_cast<Eigen::Index>(rows.front().size());
    ds.x.resize(d, static_cast<Eigen::Index>(rows.size()));
    for (size_t j = 0; j < rows.size(); ++j)
        for (Eigen::Index i = 0; i < d; ++i) ds.x(i, static_cast<Eigen::Index>(j)) = rows[j][i];
    if (has_labels) {
        ds.num_clusters = detail::compact_labels(labels);
        ds.labels = std::move(labels);
    }
    return ds;
}

/// Writes a dataset in the load_csv layout.
inline void write_csv(const std::string& path, const Dataset& ds) {
    std::ofstream out(path);
    if (!out) throw ParseError(ParseErrorKind::io, "cannot write " + path);
    out.precision(17);
    for (Eigen::Index j = 0; j < ds.x.cols(); ++j) {
        for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
            if (i) out << ',';
            out << ds.x(i, j);
        }
        if (ds.labels) out << ',' << (*ds.labels)[j];
        out << '\n';
    }
}

/// Points x = A_c b + mu_c + e (optionally tanh(A_c b) + mu_c + e), grouped by
/// subspace. Bases come from the QR factor of a Gaussian matrix.
inline Dataset generate_synthetic(const SyntheticSpec& s) {
    detail::require(s.num_subspaces >= 1, "generate_synthetic: need at least one subspace");
    detail::require(s.subspace_dim >= 1 && s.subspace_dim < s.ambient_dim,
                    "generate_synthetic: subspace_dim must be in [1, ambient_dim)");
    detail::require(s.points_per_subspace >= 1, "generate_synthetic: points_per_subspace must be positive");
    detail::require(s.noise_sigma >= 0.0, "generate_synthetic: noise_sigma must be nonnegative");
    const int total_dim = s.num_subspaces * s.subspace_dim;
    detail::require(!s.orthogonal || total_dim <= s.ambient_dim,
                    "generate_synthetic: orthogonal bases need num_subspaces*subspace_dim <= ambient_dim");

    std::mt19937_64 rng(s.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto gaussian = [&](Eigen::Index r, Eigen::Index c) {
        Matrix m(r, c);
        for (Eigen::Index j = 0; j < c; ++j)
            for (Eigen::Index i = 0; i < r; ++i) m(i, j) = gauss(rng);
        return m;
    };
    auto orthonormal = [](const Matrix& g) {
        Eigen::HouseholderQR<Matrix> qr(g);
        return Matrix(qr.householderQ() * Matrix::Identity(g.rows(), g.cols()));
    };

    std::vector<Matrix> bases;
    if (s.orthogonal) {
        const Matrix q = orthonormal(gaussian(s.ambient_dim, total_dim));
        for (int c = 0; c < s.num_subspaces; ++c)
            bases.push_back(q.middleCols(c * s.subspace_dim, s.subspace_dim));
    } else {
        for (int c = 0; c < s.num_subspaces; ++c)
            bases.push_back(orthonormal(gaussian(s.ambient_dim, s.subspace_dim)));
    }

    Dataset ds;
    ds.name = "synthetic";
    ds.num_clusters = s.num_subspaces;
    const Eigen::Index n = Eigen::Index(s.num_subspaces) * s.points_per_subspace;
    ds.x.resize(s.ambient_dim, n);
    Labels labels(static_cast<size_t>(n));
    Eigen::Index col = 0;
    for (int c = 0; c < s.num_subspaces; ++c) {
        const Vector offset = s.affine_offset ? Vector(gaussian(s.ambient_dim, 1)) : Vector::Zero(s.ambient_dim);
        const Matrix coeff = gaussian(s.subspace_dim, s.points_per_subspace);
        Matrix block = bases[c] * coeff;
        if (s.nonlinear_warp) block = block.array().tanh().matrix();
        block.colwise() += offset;
        if (s.noise_sigma > 0.0) block += s.noise_sigma * gaussian(s.ambient_dim, s.points_per_subspace);
        ds.x.middleCols(col, s.points_per_subspace) = block;
        std::fill_n(labels.begin() + col, s.points_per_subspace, c);
        col += s.points_per_subspace;
    }
    ds.labels = std::move(labels);
    return ds;
}

/// Draws exactly per_cluster points of every class without replacement.
/// Output keeps class order; within a class, original index order.
inline Dataset sample_partition(const Dataset& ds, int per_cluster, std::uint64_t seed) {
    detail::require(ds.labels.has_value(), "sample_partition: dataset has no labels");
    detail::require(per_cluster >= 1, "sample_partition: per_cluster must be positive");
    const Labels& labels = *ds.labels;
    std::vector<std::vector<Eigen::Index>> members(static_cast<size_t>(ds.num_clusters));
    for (size_t j = 0; j < labels.size(); ++j) members.at(labels[j]).push_back(static_cast<Eigen::Index>(j));
    std::mt19937_64 rng(seed);
    std::vector<Eigen::Index> picked;
    Labels out_labels;
    for (int c = 0; c < ds.num_clusters; ++c) {
        auto& m = members[c];
        detail::require(static_cast<int>(m.size()) >= per_cluster,
                        "sample_partition: class " + std::to_string(c) + " has fewer than " +
                            std::to_string(per_cluster) + " members");
        std::shuffle(m.begin(), m.end(), rng);
        std::vector<Eigen::Index> take(m.begin(), m.begin() + per_cluster);
        std::sort(take.begin(), take.end());
        for (auto j : take) {
            picked.push_back(j);
            out_labels.push_back(c);
        }
    }
    Dataset out;
    out.name = ds.name;
    out.num_clusters = ds.num_clusters;
    out.x.resize(ds.x.rows(), static_cast<Eigen::Index>(picked.size()));
    for (size_t j = 0; j < picked.size(); ++j) out.x.col(static_cast<Eigen::Index>(j)) = ds.x.col(picked[j]);
    out.labels = std::move(out_labels);
    return out;
}

inline Dataset normalize(Dataset ds, Normalization mode) {
    switch (mode) {
        case Normalization::none:
            break;
        case Normalization::unit_column:
            for (Eigen::Index j = 0; j < ds.x.cols(); ++j) {
                const double nrm = ds.x.col(j).norm();
                if (nrm > 0.0) ds.x.col(j) /= nrm;
            }
            break;
        case Normalization::minmax: {
            if (ds.x.size() == 0) break;
            const double lo = ds.x.minCoeff();
            const double hi = ds.x.maxCoeff();
            if (hi > lo) ds.x = (ds.x.array() - lo) / (hi - lo);
            else ds.x.setZero();
            break;
        }
    }
    return ds;
}

}  // namespace dsc
