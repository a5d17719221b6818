#pragma once

// JSON checkpoint container for autoencoder parameters and the
// representation matrix C. Layout (version 1):
//
//   { "format": "dsc-checkpoint", "version": 1, "activation": "tanh",
//     "encoder": [ {"rows": r, "cols": c, "weight": [r*c row-major], "bias": [r]}, ... ],
//     "decoder": [ ... same ... ],
//     "representation": {"rows": n, "cols": n, "data": [n*n row-major]} | null }
//
// Doubles are written in shortest round-trip form, so load(save(x)) == x.

#include <fstream>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "dsc/autoencoder.hpp"
#include "dsc/error.hpp"
#include "dsc/linalg.hpp"

namespace dsc {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
    AutoencoderParams params;
    std::optional<Matrix> representation;
};

namespace detail {

inline nlohmann::json matrix_json(const Matrix& m) {
    std::vector<double> data;
    data.reserve(static_cast<size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Matrix matrix_from(const nlohmann::json& j, const char* key = "data") {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at(key).get<std::vector<double>>();
    if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw ParseError(ParseErrorKind::count_mismatch, "checkpoint: matrix payload does not match its shape");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = data[static_cast<size_t>(i * cols + k)];
    return m;
}

inline nlohmann::json layers_json(const std::vector<DenseLayer>& layers) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& l : layers) {
        nlohmann::json j = matrix_json(l.weight);
        j["weight"] = std::move(j["data"]);
        j.erase("data");
        j["bias"] = std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size());
        arr.push_back(std::move(j));
    }
    return arr;
}

inline std::vector<DenseLayer> layers_from(const nlohmann::json& arr) {
    std::vector<DenseLayer> out;
    for (const auto& j : arr) {
        DenseLayer l;
        l.weight = matrix_from(j, "weight");
        const auto b = j.at("bias").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(b.size()) != l.weight.rows())
            throw ParseError(ParseErrorKind::count_mismatch, "checkpoint: bias length does not match layer rows");
        l.bias = Eigen::Map<const Vector>(b.data(), static_cast<Eigen::Index>(b.size()));
        out.push_back(std::move(l));
    }
    return out;
}

}  // namespace detail

inline nlohmann::json checkpoint_json(const AutoencoderParams& p, const std::optional<Matrix>& c = std::nullopt) {
    return {{"format", "dsc-checkpoint"},
            {"version", kCheckpointVersion},
            {"activation", to_string(p.activation)},
            {"encoder", detail::layers_json(p.encoder)},
            {"decoder", detail::layers_json(p.decoder)},
            {"representation", c ? detail::matrix_json(*c) : nlohmann::json(nullptr)}};
}

inline Checkpoint checkpoint_from_json(const nlohmann::json& j) {
    try {
        if (j.value("format", "") != "dsc-checkpoint")
            throw ParseError(ParseErrorKind::bad_magic, "checkpoint: not a dsc checkpoint");
        if (j.at("version").get<int>() != kCheckpointVersion)
            throw ParseError(ParseErrorKind::bad_magic, "checkpoint: unsupported version");
        Checkpoint ck;
        ck.params.activation = parse_activation(j.at("activation").get<std::string>());
        ck.params.encoder = detail::layers_from(j.at("encoder"));
        ck.params.decoder = detail::layers_from(j.at("decoder"));
        if (const auto& r = j.at("representation"); !r.is_null()) ck.representation = detail::matrix_from(r);
        return ck;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(ParseErrorKind::malformed, std::string("checkpoint: ") + e.what());
    }
}

inline void save_checkpoint(const std::string& path, const AutoencoderParams& p,
                            const std::optional<Matrix>& c = std::nullopt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError(ParseErrorKind::io, "cannot open " + path + " for writing");
    out << checkpoint_json(p, c).dump() << '\n';
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(ParseErrorKind::io, "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(ParseErrorKind::malformed, "checkpoint " + path + ": " + e.what());
    }
    return checkpoint_from_json(j);
}

}  // namespace dsc
