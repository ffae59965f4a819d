#include "kan/ops.hpp"

#include <cblas.h>

#include <cmath>
#include <cstdio>
#include <string>

#include "kan/errors.hpp"

namespace kan::ad {

namespace {

std::string shape_str(const Node* n) {
    return "[" + std::to_string(n->rows()) + "," + std::to_string(n->cols()) +
           "]";
}

[[noreturn]] void shape_fail(const char* op, const Tensor& a) {
    throw ShapeError(std::string(op) + ": bad shape " + shape_str(a.node()));
}

[[noreturn]] void shape_fail(const char* op, const Tensor& a,
                             const Tensor& b) {
    throw ShapeError(std::string(op) + ": incompatible shapes " +
                     shape_str(a.node()) + " and " + shape_str(b.node()));
}

Tensor make_node(const char* op, size_t r, size_t c,
                 std::vector<std::shared_ptr<Node>> parents) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->shape = {r, c};
    n->data.assign(r * c, 0.0);
    n->parents = std::move(parents);
    for (auto& p : n->parents)
        n->needs_grad = n->needs_grad || p->needs_grad;
    return Tensor(std::move(n));
}

// True when b is a [1, n] row broadcast against a [m, n] tensor.
bool row_broadcast(const Node* a, const Node* b) {
    return b->rows() == 1 && a->rows() > 1 && a->cols() == b->cols();
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) shape_fail("matmul", a, b);
    const size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out = make_node("matmul", m, n, {a.ptr(), b.ptr()});
    cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, (int)m, (int)n,
                (int)k, 1.0, a.data().data(), (int)k, b.data().data(), (int)n,
                0.0, out.data().data(), (int)n);
    if (out.node()->needs_grad) {
        out.node()->backward_fn = [m, k, n](Node& self) {
            Node* pa = self.parents[0].get();
            Node* pb = self.parents[1].get();
            if (pa->needs_grad) {
                pa->ensure_grad();  // dA += dC * B^T
                cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, (int)m,
                            (int)k, (int)n, 1.0, self.grad.data(), (int)n,
                            pb->data.data(), (int)n, 1.0, pa->grad.data(),
                            (int)k);
            }
            if (pb->needs_grad) {
                pb->ensure_grad();  // dB += A^T * dC
                cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, (int)k,
                            (int)n, (int)m, 1.0, pa->data.data(), (int)k,
                            self.grad.data(), (int)n, 1.0, pb->grad.data(),
                            (int)n);
            }
        };
    }
    return out;
}

namespace {

enum class BinKind { Add, Sub, Mul };

Tensor binary_op(const char* name, BinKind kind, const Tensor& a,
                 const Tensor& b) {
    const bool bcast = row_broadcast(a.node(), b.node());
    if (!bcast && a.shape() != b.shape()) shape_fail(name, a, b);
    const size_t m = a.rows(), n = a.cols();
    Tensor out = make_node(name, m, n, {a.ptr(), b.ptr()});
    const auto& ad = a.data();
    const auto& bd = b.data();
    auto& od = out.data();
    for (size_t i = 0; i < m; ++i)
        for (size_t j = 0; j < n; ++j) {
            double bv = bd[bcast ? j : i * n + j];
            double av = ad[i * n + j];
            od[i * n + j] = kind == BinKind::Add   ? av + bv
                            : kind == BinKind::Sub ? av - bv
                                                   : av * bv;
        }
    if (out.node()->needs_grad) {
        out.node()->backward_fn = [kind, bcast, m, n](Node& self) {
            Node* pa = self.parents[0].get();
            Node* pb = self.parents[1].get();
            if (pa->needs_grad) {
                pa->ensure_grad();
                for (size_t i = 0; i < m * n; ++i)
                    pa->grad[i] +=
                        kind == BinKind::Mul
                            ? self.grad[i] * pb->data[bcast ? i % n : i]
                            : self.grad[i];
            }
            if (pb->needs_grad) {
                pb->ensure_grad();
                const double sgn = kind == BinKind::Sub ? -1.0 : 1.0;
                for (size_t i = 0; i < m; ++i)
                    for (size_t j = 0; j < n; ++j) {
                        double g = self.grad[i * n + j];
                        if (kind == BinKind::Mul) g *= pa->data[i * n + j];
                        pb->grad[bcast ? j : i * n + j] += sgn * g;
                    }
            }
        };
    }
    return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
    return binary_op("add", BinKind::Add, a, b);
}
Tensor sub(const Tensor& a, const Tensor& b) {
    return binary_op("sub", BinKind::Sub, a, b);
}
Tensor mul(const Tensor& a, const Tensor& b) {
    // allow the broadcast operand on either side
    if (row_broadcast(b.node(), a.node()))
        return binary_op("elementwise_mul", BinKind::Mul, b, a);
    return binary_op("elementwise_mul", BinKind::Mul, a, b);
}

Tensor affine(const Tensor& a, double k, double c) {
    Tensor out = make_node("affine", a.rows(), a.cols(), {a.ptr()});
    for (size_t i = 0; i < a.size(); ++i) out.data()[i] = k * a.data()[i] + c;
    if (out.node()->needs_grad) {
        out.node()->backward_fn = [k](Node& self) {
            Node* pa = self.parents[0].get();
            if (!pa->needs_grad) return;
            pa->ensure_grad();
            for (size_t i = 0; i < self.size(); ++i)
                pa->grad[i] += k * self.grad[i];
        };
    }
    return out;
}

namespace {

Tensor unary_from_output(const char* name, const Tensor& a, double (*f)(double),
                         double (*df_from_y)(double)) {
    Tensor out = make_node(name, a.rows(), a.cols(), {a.ptr()});
    for (size_t i = 0; i < a.size(); ++i) out.data()[i] = f(a.data()[i]);
    if (out.node()->needs_grad) {
        out.node()->backward_fn = [df_from_y](Node& self) {
            Node* pa = self.parents[0].get();
            if (!pa->needs_grad) return;
            pa->ensure_grad();
            for (size_t i = 0; i < self.size(); ++i)
                pa->grad[i] += self.grad[i] * df_from_y(self.data[i]);
        };
    }
    return out;
}

}  // namespace

Tensor sigmoid(const Tensor& a) {
    return unary_from_output(
        "sigmoid", a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
        [](double y) { return y * (1.0 - y); });
}

Tensor tanh_(const Tensor& a) {
    return unary_from_output(
        "tanh", a, [](double x) { return std::tanh(x); },
        [](double y) { return 1.0 - y * y; });
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
    if (a.rows() != b.rows()) shape_fail("concat", a, b);
    const size_t m = a.rows(), p = a.cols(), q = b.cols();
    Tensor out = make_node("concat", m, p + q, {a.ptr(), b.ptr()});
    for (size_t i = 0; i < m; ++i) {
        for (size_t j = 0; j < p; ++j)
            out.data()[i * (p + q) + j] = a.data()[i * p + j];
        for (size_t j = 0; j < q; ++j)
            out.data()[i * (p + q) + p + j] = b.data()[i * q + j];
    }
    if (out.node()->needs_grad) {
        out.node()->backward_fn = [m, p, q](Node& self) {
            Node* pa = self.parents[0].get();
            Node* pb = self.parents[1].get();
            for (size_t i = 0; i < m; ++i) {
                if (pa->needs_grad) {
                    pa->ensure_grad();
                    for (size_t j = 0; j < p; ++j)
                        pa->grad[i * p + j] += self.grad[i * (p + q) + j];
                }
                if (pb->needs_grad) {
                    pb->ensure_grad();
                    for (size_t j = 0; j < q; ++j)
                        pb->grad[i * q + j] += self.grad[i * (p + q) + p + j];
                }
            }
        };
    }
    return out;
}

Tensor slice_rows(const Tensor& a, size_t r0, size_t r1) {
    if (r0 >= r1 || r1 > a.rows()) shape_fail("slice_rows", a);
    const size_t n = a.cols(), m = r1 - r0;
    Tensor out = make_node("slice_rows", m, n, {a.ptr()});
    for (size_t i = 0; i < m * n; ++i) out.data()[i] = a.data()[r0 * n + i];
    if (out.node()->needs_grad) {
        out.node()->backward_fn = [r0, m, n](Node& self) {
            Node* pa = self.parents[0].get();
            if (!pa->needs_grad) return;
            pa->ensure_grad();
            for (size_t i = 0; i < m * n; ++i)
                pa->grad[r0 * n + i] += self.grad[i];
        };
    }
    return out;
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int32_t>& ids) {
    const size_t v = table.rows(), d = table.cols();
    for (int32_t id : ids)
        if (id < 0 || static_cast<size_t>(id) >= v)
            throw ShapeError("embedding_lookup: id " + std::to_string(id) +
                             " out of range for table with " +
                             std::to_string(v) + " rows");
    Tensor out = make_node("embedding_lookup", ids.size(), d, {table.ptr()});
    for (size_t i = 0; i < ids.size(); ++i)
        for (size_t j = 0; j < d; ++j)
            out.data()[i * d + j] = table.data()[ids[i] * d + j];
    if (out.node()->needs_grad) {
        out.node()->backward_fn = [ids, d](Node& self) {
            Node* pt = self.parents[0].get();
            if (!pt->needs_grad) return;
            pt->ensure_grad();
            for (size_t i = 0; i < ids.size(); ++i)
                for (size_t j = 0; j < d; ++j)
                    pt->grad[ids[i] * d + j] += self.grad[i * d + j];
        };
    }
    return out;
}

Tensor dropout(const Tensor& a, double keep, Rng& rng, bool training) {
    if (keep <= 0.0 || keep > 1.0)
        throw ShapeError("dropout: keep probability must be in (0, 1]");
    if (!training) return a;  // identity, same node
    std::vector<double> mask(a.size());
    const double inv = 1.0 / keep;
    for (auto& m : mask) m = rng.u01() < keep ? inv : 0.0;
    Tensor out = make_node("dropout", a.rows(), a.cols(), {a.ptr()});
    for (size_t i = 0; i < a.size(); ++i)
        out.data()[i] = a.data()[i] * mask[i];
    if (out.node()->needs_grad) {
        out.node()->backward_fn = [mask = std::move(mask)](Node& self) {
            Node* pa = self.parents[0].get();
            if (!pa->needs_grad) return;
            pa->ensure_grad();
            for (size_t i = 0; i < self.size(); ++i)
                pa->grad[i] += self.grad[i] * mask[i];
        };
    }
    return out;
}

Tensor softmax_cross_entropy(const Tensor& logits,
                             const std::vector<int32_t>& labels) {
    const size_t b = logits.rows(), c = logits.cols();
    if (labels.size() != b)
        throw ShapeError(
            "softmax_cross_entropy: " + std::to_string(labels.size()) +
            " labels for logits " + shape_str(logits.node()));
    for (int32_t l : labels)
        if (l < 0 || static_cast<size_t>(l) >= c)
            throw ShapeError("softmax_cross_entropy: label " +
                             std::to_string(l) + " out of range");
    std::vector<double> probs(b * c);
    double loss = 0.0;
    for (size_t i = 0; i < b; ++i) {
        double mx = logits.data()[i * c];
        for (size_t j = 1; j < c; ++j)
            mx = std::max(mx, logits.data()[i * c + j]);
        double z = 0.0;
        for (size_t j = 0; j < c; ++j) {
            probs[i * c + j] = std::exp(logits.data()[i * c + j] - mx);
            z += probs[i * c + j];
        }
        for (size_t j = 0; j < c; ++j) probs[i * c + j] /= z;
        loss -= std::log(probs[i * c + labels[i]]);
    }
    Tensor out = make_node("softmax_cross_entropy", 1, 1, {logits.ptr()});
    out.data()[0] = loss / static_cast<double>(b);
    if (out.node()->needs_grad) {
        out.node()->backward_fn = [probs = std::move(probs), labels, b,
                                   c](Node& self) {
            Node* pl = self.parents[0].get();
            if (!pl->needs_grad) return;
            pl->ensure_grad();
            const double g = self.grad[0] / static_cast<double>(b);
            for (size_t i = 0; i < b; ++i)
                for (size_t j = 0; j < c; ++j)
                    pl->grad[i * c + j] +=
                        g * (probs[i * c + j] -
                             (labels[i] == static_cast<int32_t>(j) ? 1.0
                                                                   : 0.0));
        };
    }
    return out;
}

Tensor sum(const Tensor& a) {
    Tensor out = make_node("sum", 1, 1, {a.ptr()});
    double s = 0.0;
    for (double v : a.data()) s += v;
    out.data()[0] = s;
    if (out.node()->needs_grad) {
        out.node()->backward_fn = [](Node& self) {
            Node* pa = self.parents[0].get();
            if (!pa->needs_grad) return;
            pa->ensure_grad();
            for (size_t i = 0; i < pa->size(); ++i)
                pa->grad[i] += self.grad[0];
        };
    }
    return out;
}

}  // namespace kan::ad
