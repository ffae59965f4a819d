#include "kan/rnn.hpp"

#include "kan/errors.hpp"

namespace kan {

using namespace ad;

namespace {

Tensor uniform_tensor(size_t r, size_t c, double lo, double hi, Rng& rng) {
    std::vector<double> data(r * c);
    for (auto& v : data) v = rng.uniform(lo, hi);
    return Tensor::from(r, c, std::move(data), true);
}

constexpr double kInitRange = 0.08;

}  // namespace

GruParams GruParams::init(size_t input_dim, size_t hidden_dim, Rng& rng) {
    GruParams p;
    p.input_dim = input_dim;
    p.hidden_dim = hidden_dim;
    auto w = [&](size_t r, size_t c) {
        return uniform_tensor(r, c, -kInitRange, kInitRange, rng);
    };
    p.wz = w(input_dim, hidden_dim);
    p.uz = w(hidden_dim, hidden_dim);
    p.bz = Tensor::zeros(1, hidden_dim, true);
    p.wr = w(input_dim, hidden_dim);
    p.ur = w(hidden_dim, hidden_dim);
    p.br = Tensor::zeros(1, hidden_dim, true);
    p.wh = w(input_dim, hidden_dim);
    p.uh = w(hidden_dim, hidden_dim);
    p.bh = Tensor::zeros(1, hidden_dim, true);
    return p;
}

std::vector<NamedTensor> GruParams::named(const std::string& prefix) const {
    return {{prefix + ".wz", wz}, {prefix + ".uz", uz}, {prefix + ".bz", bz},
            {prefix + ".wr", wr}, {prefix + ".ur", ur}, {prefix + ".br", br},
            {prefix + ".wh", wh}, {prefix + ".uh", uh}, {prefix + ".bh", bh}};
}

void GruParams::set_requires_grad(bool rg) {
    for (auto& nt : named("")) nt.tensor.set_requires_grad(rg);
}

Tensor gru_cell(const Tensor& x, const Tensor& h_prev, const GruParams& p) {
    if (x.cols() != p.input_dim || h_prev.cols() != p.hidden_dim ||
        x.rows() != h_prev.rows())
        throw ShapeError("gru_cell: input [" + std::to_string(x.rows()) + "," +
                         std::to_string(x.cols()) + "] hidden [" +
                         std::to_string(h_prev.rows()) + "," +
                         std::to_string(h_prev.cols()) +
                         "] do not match dims " + std::to_string(p.input_dim) +
                         "/" + std::to_string(p.hidden_dim));
    Tensor z = sigmoid(add(add(matmul(x, p.wz), matmul(h_prev, p.uz)), p.bz));
    Tensor r = sigmoid(add(add(matmul(x, p.wr), matmul(h_prev, p.ur)), p.br));
    Tensor cand =
        tanh_(add(add(matmul(x, p.wh), matmul(mul(r, h_prev), p.uh)), p.bh));
    return add(mul(affine(z, -1.0, 1.0), h_prev), mul(z, cand));
}

std::vector<Tensor> run_gru(const std::vector<Tensor>& xs,
                            const GruParams& p) {
    std::vector<Tensor> hs;
    hs.reserve(xs.size());
    Tensor h = Tensor::zeros(xs.empty() ? 0 : xs[0].rows(), p.hidden_dim);
    for (const Tensor& x : xs) {
        h = gru_cell(x, h, p);
        hs.push_back(h);
    }
    return hs;
}

std::vector<Tensor> run_sequence(
    const std::vector<std::vector<int32_t>>& token_rows,
    const Tensor& embeddings, const GruParams& p, double dropout_keep,
    Mode mode, Rng& rng) {
    if (token_rows.empty())
        throw ShapeError("run_sequence: empty batch");
    const size_t step = token_rows[0].size();
    for (const auto& row : token_rows)
        if (row.size() != step)
            throw ShapeError("run_sequence: ragged token rows");
    std::vector<Tensor> xs;
    xs.reserve(step);
    std::vector<int32_t> ids(token_rows.size());
    for (size_t s = 0; s < step; ++s) {
        for (size_t i = 0; i < token_rows.size(); ++i) ids[i] = token_rows[i][s];
        Tensor x = embedding_lookup(embeddings, ids);
        xs.push_back(dropout(x, dropout_keep, rng, mode == Mode::Train));
    }
    return run_gru(xs, p);
}

DenseHead DenseHead::init(size_t hidden_dim, size_t classes, Rng& rng) {
    DenseHead h;
    h.w = uniform_tensor(hidden_dim, classes, -kInitRange, kInitRange, rng);
    h.b = Tensor::zeros(1, classes, true);
    return h;
}

Tensor DenseHead::logits(const Tensor& h) const {
    return add(matmul(h, w), b);
}

std::vector<NamedTensor> DenseHead::named(const std::string& prefix) const {
    return {{prefix + ".w", w}, {prefix + ".b", b}};
}

}  // namespace kan
