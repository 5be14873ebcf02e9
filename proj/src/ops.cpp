#include "clab/ops.hpp"

#include "clab/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace clab {

namespace {

void require(bool ok, const char* what) {
    if (!ok) {
        throw std::invalid_argument(what);
    }
}

bool wants_grad(const Tape* tape, std::initializer_list<const TensorPtr*> inputs) {
    if (tape == nullptr) {
        return false;
    }
    for (const TensorPtr* t : inputs) {
        if ((*t)->requires_grad) {
            return true;
        }
    }
    return false;
}

} // namespace

TensorPtr matmul(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
    require(a->shape.size() == 2 && b->shape.size() == 2, "matmul: rank-2 inputs required");
    const std::size_t m = a->shape[0], k = a->shape[1], n = b->shape[1];
    require(b->shape[0] == k, "matmul: inner dimensions differ");

    auto out = make_tensor({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                acc += a->values[i * k + p] * b->values[p * n + j];
            }
            out->values[i * n + j] = acc;
        }
    }

    if (wants_grad(tape, {&a, &b})) {
        out->requires_grad = true;
        tape->record([a, b, out, m, k, n]() {
            out->ensure_grad();
            if (a->requires_grad) {
                a->ensure_grad();
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t p = 0; p < k; ++p) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < n; ++j) {
                            acc += out->grad[i * n + j] * b->values[p * n + j];
                        }
                        a->grad[i * k + p] += acc;
                    }
                }
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (std::size_t p = 0; p < k; ++p) {
                    for (std::size_t j = 0; j < n; ++j) {
                        double acc = 0.0;
                        for (std::size_t i = 0; i < m; ++i) {
                            acc += a->values[i * k + p] * out->grad[i * n + j];
                        }
                        b->grad[p * n + j] += acc;
                    }
                }
            }
        });
    }
    return out;
}

TensorPtr linear(Tape* tape, const TensorPtr& x, const TensorPtr& w, const TensorPtr& b) {
    require(x->shape.size() == 2 && w->shape.size() == 2 && b->shape.size() == 1,
            "linear: expected x [N,I], w [I,O], b [O]");
    const std::size_t n = x->shape[0], in = x->shape[1], out_dim = w->shape[1];
    require(w->shape[0] == in && b->shape[0] == out_dim, "linear: shape mismatch");

    auto out = make_tensor({n, out_dim});
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t o = 0; o < out_dim; ++o) {
            double acc = b->values[o];
            for (std::size_t i = 0; i < in; ++i) {
                acc += x->values[r * in + i] * w->values[i * out_dim + o];
            }
            out->values[r * out_dim + o] = acc;
        }
    }

    if (wants_grad(tape, {&x, &w, &b})) {
        out->requires_grad = true;
        tape->record([x, w, b, out, n, in, out_dim]() {
            out->ensure_grad();
            if (x->requires_grad) {
                x->ensure_grad();
                for (std::size_t r = 0; r < n; ++r) {
                    for (std::size_t i = 0; i < in; ++i) {
                        double acc = 0.0;
                        for (std::size_t o = 0; o < out_dim; ++o) {
                            acc += out->grad[r * out_dim + o] * w->values[i * out_dim + o];
                        }
                        x->grad[r * in + i] += acc;
                    }
                }
            }
            if (w->requires_grad) {
                w->ensure_grad();
                for (std::size_t i = 0; i < in; ++i) {
                    for (std::size_t o = 0; o < out_dim; ++o) {
                        double acc = 0.0;
                        for (std::size_t r = 0; r < n; ++r) {
                            acc += x->values[r * in + i] * out->grad[r * out_dim + o];
                        }
                        w->grad[i * out_dim + o] += acc;
                    }
                }
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (std::size_t o = 0; o < out_dim; ++o) {
                    double acc = 0.0;
                    for (std::size_t r = 0; r < n; ++r) {
                        acc += out->grad[r * out_dim + o];
                    }
                    b->grad[o] += acc;
                }
            }
        });
    }
    return out;
}

TensorPtr conv2d_3x3(Tape* tape, const TensorPtr& x, const TensorPtr& k) {
    require(x->shape.size() == 4 && k->shape.size() == 4, "conv2d_3x3: rank-4 inputs required");
    const std::size_t n = x->shape[0], c_in = x->shape[1], h = x->shape[2], w = x->shape[3];
    const std::size_t f = k->shape[0];
    require(k->shape[1] == c_in && k->shape[2] == 3 && k->shape[3] == 3,
            "conv2d_3x3: kernel must be [F,Cin,3,3]");

    auto out = make_tensor({n, f, h, w});
    const auto xi = [c_in, h, w](std::size_t b, std::size_t c, std::size_t y, std::size_t xx) {
        return ((b * c_in + c) * h + y) * w + xx;
    };
    const auto oi = [f, h, w](std::size_t b, std::size_t cf, std::size_t y, std::size_t xx) {
        return ((b * f + cf) * h + y) * w + xx;
    };
    const auto ki = [c_in](std::size_t cf, std::size_t c, std::size_t dy, std::size_t dx) {
        return ((cf * c_in + c) * 3 + dy) * 3 + dx;
    };

    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t cf = 0; cf < f; ++cf) {
            for (std::size_t y = 0; y < h; ++y) {
                for (std::size_t xx = 0; xx < w; ++xx) {
                    double acc = 0.0;
                    for (std::size_t c = 0; c < c_in; ++c) {
                        for (std::size_t dy = 0; dy < 3; ++dy) {
                            const std::ptrdiff_t sy =
                                static_cast<std::ptrdiff_t>(y + dy) - 1;
                            if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) {
                                continue;
                            }
                            for (std::size_t dx = 0; dx < 3; ++dx) {
                                const std::ptrdiff_t sx =
                                    static_cast<std::ptrdiff_t>(xx + dx) - 1;
                                if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) {
                                    continue;
                                }
                                acc += x->values[xi(b, c, static_cast<std::size_t>(sy),
                                                    static_cast<std::size_t>(sx))] *
                                       k->values[ki(cf, c, dy, dx)];
                            }
                        }
                    }
                    out->values[oi(b, cf, y, xx)] = acc;
                }
            }
        }
    }

    if (wants_grad(tape, {&x, &k})) {
        out->requires_grad = true;
        tape->record([x, k, out, n, c_in, h, w, f, xi, oi, ki]() {
            out->ensure_grad();
            const bool gx = x->requires_grad;
            const bool gk = k->requires_grad;
            if (gx) {
                x->ensure_grad();
            }
            if (gk) {
                k->ensure_grad();
            }
            for (std::size_t b = 0; b < n; ++b) {
                for (std::size_t cf = 0; cf < f; ++cf) {
                    for (std::size_t y = 0; y < h; ++y) {
                        for (std::size_t xx = 0; xx < w; ++xx) {
                            const double go = out->grad[oi(b, cf, y, xx)];
                            if (go == 0.0) {
                                continue;
                            }
                            for (std::size_t c = 0; c < c_in; ++c) {
                                for (std::size_t dy = 0; dy < 3; ++dy) {
                                    const std::ptrdiff_t sy =
                                        static_cast<std::ptrdiff_t>(y + dy) - 1;
                                    if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) {
                                        continue;
                                    }
                                    for (std::size_t dx = 0; dx < 3; ++dx) {
                                        const std::ptrdiff_t sx =
                                            static_cast<std::ptrdiff_t>(xx + dx) - 1;
                                        if (sx < 0 ||
                                            sx >= static_cast<std::ptrdiff_t>(w)) {
                                            continue;
                                        }
                                        const std::size_t src =
                                            xi(b, c, static_cast<std::size_t>(sy),
                                               static_cast<std::size_t>(sx));
                                        if (gx) {
                                            x->grad[src] += go * k->values[ki(cf, c, dy, dx)];
                                        }
                                        if (gk) {
                                            k->grad[ki(cf, c, dy, dx)] += go * x->values[src];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        });
    }
    return out;
}

TensorPtr bias_nchw(Tape* tape, const TensorPtr& x, const TensorPtr& b) {
    require(x->shape.size() == 4 && b->shape.size() == 1, "bias_nchw: expected x [N,C,H,W], b [C]");
    const std::size_t n = x->shape[0], c = x->shape[1], h = x->shape[2], w = x->shape[3];
    require(b->shape[0] == c, "bias_nchw: channel count mismatch");

    auto out = make_tensor(x->shape);
    const std::size_t plane = h * w;
    for (std::size_t bi = 0; bi < n; ++bi) {
        for (std::size_t ci = 0; ci < c; ++ci) {
            const double bias = b->values[ci];
            const std::size_t base = (bi * c + ci) * plane;
            for (std::size_t p = 0; p < plane; ++p) {
                out->values[base + p] = x->values[base + p] + bias;
            }
        }
    }

    if (wants_grad(tape, {&x, &b})) {
        out->requires_grad = true;
        tape->record([x, b, out, n, c, plane]() {
            out->ensure_grad();
            if (x->requires_grad) {
                x->ensure_grad();
                for (std::size_t i = 0; i < out->grad.size(); ++i) {
                    x->grad[i] += out->grad[i];
                }
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (std::size_t bi = 0; bi < n; ++bi) {
                    for (std::size_t ci = 0; ci < c; ++ci) {
                        const std::size_t base = (bi * c + ci) * plane;
                        double acc = 0.0;
                        for (std::size_t p = 0; p < plane; ++p) {
                            acc += out->grad[base + p];
                        }
                        b->grad[ci] += acc;
                    }
                }
            }
        });
    }
    return out;
}

TensorPtr relu(Tape* tape, const TensorPtr& x) {
    auto out = make_tensor(x->shape);
    for (std::size_t i = 0; i < x->values.size(); ++i) {
        out->values[i] = x->values[i] > 0.0 ? x->values[i] : 0.0;
    }
    if (wants_grad(tape, {&x})) {
        out->requires_grad = true;
        tape->record([x, out]() {
            out->ensure_grad();
            x->ensure_grad();
            for (std::size_t i = 0; i < x->values.size(); ++i) {
                if (x->values[i] > 0.0) {
                    x->grad[i] += out->grad[i];
                }
            }
        });
    }
    return out;
}

TensorPtr maxpool2(Tape* tape, const TensorPtr& x) {
    require(x->shape.size() == 4, "maxpool2: rank-4 input required");
    const std::size_t n = x->shape[0], c = x->shape[1], h = x->shape[2], w = x->shape[3];
    require(h % 2 == 0 && w % 2 == 0, "maxpool2: height and width must be even");
    const std::size_t oh = h / 2, ow = w / 2;

    auto out = make_tensor({n, c, oh, ow});
    auto argmax = std::make_shared<std::vector<std::size_t>>(out->numel());
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t ci = 0; ci < c; ++ci) {
            for (std::size_t y = 0; y < oh; ++y) {
                for (std::size_t xx = 0; xx < ow; ++xx) {
                    const std::size_t base = ((b * c + ci) * h + 2 * y) * w + 2 * xx;
                    // Window scanned in row-major order; strict > keeps the
                    // first maximal element on ties.
                    const std::size_t cand[4] = {base, base + 1, base + w, base + w + 1};
                    std::size_t best = cand[0];
                    for (int j = 1; j < 4; ++j) {
                        if (x->values[cand[j]] > x->values[best]) {
                            best = cand[j];
                        }
                    }
                    const std::size_t oidx = ((b * c + ci) * oh + y) * ow + xx;
                    out->values[oidx] = x->values[best];
                    (*argmax)[oidx] = best;
                }
            }
        }
    }

    if (wants_grad(tape, {&x})) {
        out->requires_grad = true;
        tape->record([x, out, argmax]() {
            out->ensure_grad();
            x->ensure_grad();
            for (std::size_t i = 0; i < out->grad.size(); ++i) {
                x->grad[(*argmax)[i]] += out->grad[i];
            }
        });
    }
    return out;
}

TensorPtr flatten2(Tape* tape, const TensorPtr& x) {
    require(x->shape.size() >= 2, "flatten2: rank >= 2 required");
    std::size_t rest = 1;
    for (std::size_t d = 1; d < x->shape.size(); ++d) {
        rest *= x->shape[d];
    }
    auto out = make_tensor({x->shape[0], rest});
    out->values = x->values;
    if (wants_grad(tape, {&x})) {
        out->requires_grad = true;
        tape->record([x, out]() {
            out->ensure_grad();
            x->ensure_grad();
            for (std::size_t i = 0; i < x->grad.size(); ++i) {
                x->grad[i] += out->grad[i];
            }
        });
    }
    return out;
}

TensorPtr gather_rows(Tape* tape, const TensorPtr& x, const std::vector<std::size_t>& idx) {
    require(x->shape.size() >= 1, "gather_rows: rank >= 1 required");
    const std::size_t rows = x->shape[0];
    std::size_t d = 1;
    for (std::size_t i = 1; i < x->shape.size(); ++i) {
        d *= x->shape[i];
    }
    std::vector<std::size_t> out_shape = x->shape;
    out_shape[0] = idx.size();
    auto out = make_tensor(out_shape);
    for (std::size_t r = 0; r < idx.size(); ++r) {
        require(idx[r] < rows, "gather_rows: index out of range");
        std::copy_n(x->values.begin() + static_cast<std::ptrdiff_t>(idx[r] * d), d,
                    out->values.begin() + static_cast<std::ptrdiff_t>(r * d));
    }
    if (wants_grad(tape, {&x})) {
        out->requires_grad = true;
        auto indices = std::make_shared<std::vector<std::size_t>>(idx);
        tape->record([x, out, indices, d]() {
            out->ensure_grad();
            x->ensure_grad();
            for (std::size_t r = 0; r < indices->size(); ++r) {
                const std::size_t src = r * d;
                const std::size_t dst = (*indices)[r] * d;
                for (std::size_t j = 0; j < d; ++j) {
                    x->grad[dst + j] += out->grad[src + j];
                }
            }
        });
    }
    return out;
}

TensorPtr mix(Tape* tape, const TensorPtr& a, const TensorPtr& b, double lambda) {
    require(a->shape == b->shape, "mix: shape mismatch");
    auto out = make_tensor(a->shape);
    const double lb = 1.0 - lambda;
    for (std::size_t i = 0; i < a->values.size(); ++i) {
        out->values[i] = lambda * a->values[i] + lb * b->values[i];
    }
    if (wants_grad(tape, {&a, &b})) {
        out->requires_grad = true;
        tape->record([a, b, out, lambda, lb]() {
            out->ensure_grad();
            if (a->requires_grad) {
                a->ensure_grad();
                for (std::size_t i = 0; i < a->grad.size(); ++i) {
                    a->grad[i] += lambda * out->grad[i];
                }
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (std::size_t i = 0; i < b->grad.size(); ++i) {
                    b->grad[i] += lb * out->grad[i];
                }
            }
        });
    }
    return out;
}

TensorPtr add(Tape* tape, const TensorPtr& a, const TensorPtr& b) {
    require(a->shape == b->shape, "add: shape mismatch");
    auto out = make_tensor(a->shape);
    for (std::size_t i = 0; i < a->values.size(); ++i) {
        out->values[i] = a->values[i] + b->values[i];
    }
    if (wants_grad(tape, {&a, &b})) {
        out->requires_grad = true;
        tape->record([a, b, out]() {
            out->ensure_grad();
            if (a->requires_grad) {
                a->ensure_grad();
                for (std::size_t i = 0; i < a->grad.size(); ++i) {
                    a->grad[i] += out->grad[i];
                }
            }
            if (b->requires_grad) {
                b->ensure_grad();
                for (std::size_t i = 0; i < b->grad.size(); ++i) {
                    b->grad[i] += out->grad[i];
                }
            }
        });
    }
    return out;
}

TensorPtr scale(Tape* tape, const TensorPtr& a, double s) {
    auto out = make_tensor(a->shape);
    for (std::size_t i = 0; i < a->values.size(); ++i) {
        out->values[i] = s * a->values[i];
    }
    if (wants_grad(tape, {&a})) {
        out->requires_grad = true;
        tape->record([a, out, s]() {
            out->ensure_grad();
            a->ensure_grad();
            for (std::size_t i = 0; i < a->grad.size(); ++i) {
                a->grad[i] += s * out->grad[i];
            }
        });
    }
    return out;
}

TensorPtr weighted_sum(Tape* tape, const TensorPtr& x, const std::vector<double>& weights) {
    require(weights.size() == x->values.size(), "weighted_sum: weight count mismatch");
    auto out = make_tensor({1});
    double acc = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
        acc += weights[i] * x->values[i];
    }
    out->values[0] = acc;
    if (wants_grad(tape, {&x})) {
        out->requires_grad = true;
        auto w = std::make_shared<std::vector<double>>(weights);
        tape->record([x, out, w]() {
            out->ensure_grad();
            x->ensure_grad();
            for (std::size_t i = 0; i < w->size(); ++i) {
                x->grad[i] += (*w)[i] * out->grad[0];
            }
        });
    }
    return out;
}

TensorPtr softmax_xent(Tape* tape, const TensorPtr& logits, const TensorPtr& targets) {
    require(logits->shape.size() == 2 && targets->shape == logits->shape,
            "softmax_xent: logits and targets must share a [N,C] shape");
    const std::size_t n = logits->shape[0], c = logits->shape[1];
    require(c >= 2, "softmax_xent: at least two classes required");
    require(n >= 1, "softmax_xent: empty batch");

    for (double v : logits->values) {
        if (!std::isfinite(v)) {
            throw NumericError("softmax_xent: non-finite logit");
        }
    }
    for (std::size_t r = 0; r < n; ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            s += targets->values[r * c + j];
        }
        if (std::abs(s - 1.0) > 1e-9) {
            throw std::invalid_argument("softmax_xent: target row does not sum to 1");
        }
    }

    auto out = make_tensor({1});
    auto probs = std::make_shared<std::vector<double>>(n * c);
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        double m = logits->values[r * c];
        for (std::size_t j = 1; j < c; ++j) {
            m = std::max(m, logits->values[r * c + j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            z += std::exp(logits->values[r * c + j] - m);
        }
        const double lse = m + std::log(z);
        double dot = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            (*probs)[r * c + j] = std::exp(logits->values[r * c + j] - m) / z;
            dot += targets->values[r * c + j] * logits->values[r * c + j];
        }
        total += lse - dot;
    }
    out->values[0] = total / static_cast<double>(n);

    if (wants_grad(tape, {&logits})) {
        out->requires_grad = true;
        tape->record([logits, targets, out, probs, n, c]() {
            out->ensure_grad();
            logits->ensure_grad();
            const double g = out->grad[0] / static_cast<double>(n);
            for (std::size_t i = 0; i < n * c; ++i) {
                logits->grad[i] += g * ((*probs)[i] - targets->values[i]);
            }
        });
    }
    return out;
}

std::vector<double> softmax_rows(const TensorPtr& logits) {
    require(logits->shape.size() == 2, "softmax_rows: rank-2 input required");
    const std::size_t n = logits->shape[0], c = logits->shape[1];
    std::vector<double> probs(n * c);
    for (std::size_t r = 0; r < n; ++r) {
        double m = logits->values[r * c];
        for (std::size_t j = 1; j < c; ++j) {
            m = std::max(m, logits->values[r * c + j]);
        }
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
            z += std::exp(logits->values[r * c + j] - m);
        }
        for (std::size_t j = 0; j < c; ++j) {
            probs[r * c + j] = std::exp(logits->values[r * c + j] - m) / z;
        }
    }
    return probs;
}

std::vector<std::size_t> argmax_rows(const TensorPtr& logits) {
    require(logits->shape.size() == 2, "argmax_rows: rank-2 input required");
    const std::size_t n = logits->shape[0], c = logits->shape[1];
    std::vector<std::size_t> idx(n);
    for (std::size_t r = 0; r < n; ++r) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < c; ++j) {
            if (logits->values[r * c + j] > logits->values[r * c + best]) {
                best = j;
            }
        }
        idx[r] = best;
    }
    return idx;
}

TensorPtr one_hot(const std::vector<std::size_t>& labels, std::size_t num_classes) {
    auto out = make_tensor({labels.size(), num_classes});
    for (std::size_t r = 0; r < labels.size(); ++r) {
        require(labels[r] < num_classes, "one_hot: label out of range");
        out->values[r * num_classes + labels[r]] = 1.0;
    }
    return out;
}

} // namespace clab
