#include "beta/tape.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "beta/errors.hpp"
#include "beta/kernels.hpp"

namespace beta {

namespace {
double stable_sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}
}  // namespace

NodeId Tape::push(Tensor value, bool requires_grad, const char* op,
                  std::function<void(Tape&, NodeId)> backward) {
    value.check_finite(op);
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    n.op = op;
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return static_cast<NodeId>(nodes_.size()) - 1;
}

void Tape::check_id(NodeId id, const char* what) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
        throw state_error(std::string(what) + ": node " + std::to_string(id) +
                          " is not on this tape");
}

NodeId Tape::leaf(Tensor value, bool requires_grad) {
    return push(std::move(value), requires_grad, "leaf", nullptr);
}

Tensor& Tape::ensure_grad(NodeId id) {
    Node& n = nodes_[id];
    if (n.grad.empty()) n.grad = Tensor::zeros(n.value.shape());
    return n.grad;
}

void Tape::accum(NodeId id, const double* g, std::size_t n) {
    if (!rg(id)) return;
    Tensor& ga = ensure_grad(id);
    kern::ops().vadd(ga.data(), g, ga.data(), n);
}

NodeId Tape::add(NodeId a, NodeId b) {
    check_id(a, "add");
    check_id(b, "add");
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[b].value;
    if (!ta.same_shape(tb))
        throw dim_error("add: shape mismatch " + ta.shape_str() + " vs " +
                        tb.shape_str());
    Tensor out = Tensor::zeros(ta.shape());
    kern::ops().vadd(ta.data(), tb.data(), out.data(), ta.size());
    return push(std::move(out), rg(a) || rg(b), "add", [a, b](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        t.accum(a, g.data(), g.size());
        t.accum(b, g.data(), g.size());
    });
}

NodeId Tape::sub(NodeId a, NodeId b) {
    check_id(a, "sub");
    check_id(b, "sub");
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[b].value;
    if (!ta.same_shape(tb))
        throw dim_error("sub: shape mismatch " + ta.shape_str() + " vs " +
                        tb.shape_str());
    Tensor out = Tensor::zeros(ta.shape());
    kern::ops().vsub(ta.data(), tb.data(), out.data(), ta.size());
    return push(std::move(out), rg(a) || rg(b), "sub", [a, b](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        t.accum(a, g.data(), g.size());
        if (t.rg(b)) {
            Tensor& gb = t.ensure_grad(b);
            kern::ops().vaxpy(-1.0, g.data(), gb.data(), g.size());
        }
    });
}

NodeId Tape::mul(NodeId a, NodeId b) {
    check_id(a, "mul");
    check_id(b, "mul");
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[b].value;
    if (!ta.same_shape(tb))
        throw dim_error("mul: shape mismatch " + ta.shape_str() + " vs " +
                        tb.shape_str());
    Tensor out = Tensor::zeros(ta.shape());
    kern::ops().vmul(ta.data(), tb.data(), out.data(), ta.size());
    return push(std::move(out), rg(a) || rg(b), "mul", [a, b](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        const std::size_t n = g.size();
        if (t.rg(a)) {
            Tensor tmp = Tensor::zeros(g.shape());
            kern::ops().vmul(g.data(), t.nodes_[b].value.data(), tmp.data(), n);
            t.accum(a, tmp.data(), n);
        }
        if (t.rg(b)) {
            Tensor tmp = Tensor::zeros(g.shape());
            kern::ops().vmul(g.data(), t.nodes_[a].value.data(), tmp.data(), n);
            t.accum(b, tmp.data(), n);
        }
    });
}

NodeId Tape::add_scalar(NodeId a, double c) {
    check_id(a, "add_scalar");
    const Tensor& ta = nodes_[a].value;
    Tensor out = ta;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += c;
    return push(std::move(out), rg(a), "add_scalar", [a](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        t.accum(a, g.data(), g.size());
    });
}

NodeId Tape::scale(NodeId a, double c) {
    check_id(a, "scale");
    const Tensor& ta = nodes_[a].value;
    Tensor out = Tensor::zeros(ta.shape());
    kern::ops().vscale(ta.data(), c, out.data(), ta.size());
    return push(std::move(out), rg(a), "scale", [a, c](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        if (!t.rg(a)) return;
        Tensor& ga = t.ensure_grad(a);
        kern::ops().vaxpy(c, g.data(), ga.data(), g.size());
    });
}

NodeId Tape::matmul(NodeId a, NodeId b) {
    check_id(a, "matmul");
    check_id(b, "matmul");
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[b].value;

    std::size_t m, k, n;
    std::vector<std::size_t> out_shape;
    if (ta.rank() == 2 && tb.rank() == 2) {
        m = ta.rows(), k = ta.cols(), n = tb.cols();
        if (tb.rows() != k)
            throw dim_error("matmul: inner dims " + ta.shape_str() + " x " +
                            tb.shape_str());
        out_shape = {m, n};
    } else if (ta.rank() == 1 && tb.rank() == 2) {
        m = 1, k = ta.size(), n = tb.cols();
        if (tb.rows() != k)
            throw dim_error("matmul: inner dims " + ta.shape_str() + " x " +
                            tb.shape_str());
        out_shape = {n};
    } else if (ta.rank() == 2 && tb.rank() == 1) {
        m = ta.rows(), k = ta.cols(), n = 1;
        if (tb.size() != k)
            throw dim_error("matmul: inner dims " + ta.shape_str() + " x " +
                            tb.shape_str());
        out_shape = {m};
    } else {
        throw dim_error("matmul: unsupported ranks " + ta.shape_str() + " x " +
                        tb.shape_str());
    }

    Tensor out = Tensor::zeros(out_shape);
    kern::ops().matmul(m, k, n, ta.data(), tb.data(), out.data());
    return push(std::move(out), rg(a) || rg(b), "matmul",
                [a, b, m, k, n](Tape& t, NodeId self) {
                    const Tensor& g = t.nodes_[self].grad;
                    if (t.rg(a)) {
                        Tensor& ga = t.ensure_grad(a);
                        kern::ops().matmul_acc_nt(m, n, k, g.data(),
                                                  t.nodes_[b].value.data(), ga.data());
                    }
                    if (t.rg(b)) {
                        Tensor& gb = t.ensure_grad(b);
                        kern::ops().matmul_acc_tn(m, k, n, t.nodes_[a].value.data(),
                                                  g.data(), gb.data());
                    }
                });
}

NodeId Tape::dot(NodeId a, NodeId b) {
    check_id(a, "dot");
    check_id(b, "dot");
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[b].value;
    if (ta.rank() != 1 || tb.rank() != 1 || ta.size() != tb.size())
        throw dim_error("dot: need equal-length vectors, got " + ta.shape_str() +
                        " and " + tb.shape_str());
    Tensor out = Tensor::scalar(kern::ops().dot4(ta.data(), tb.data(), ta.size()));
    return push(std::move(out), rg(a) || rg(b), "dot", [a, b](Tape& t, NodeId self) {
        const double g = t.nodes_[self].grad.item();
        const std::size_t n = t.nodes_[a].value.size();
        if (t.rg(a)) {
            Tensor& ga = t.ensure_grad(a);
            kern::ops().vaxpy(g, t.nodes_[b].value.data(), ga.data(), n);
        }
        if (t.rg(b)) {
            Tensor& gb = t.ensure_grad(b);
            kern::ops().vaxpy(g, t.nodes_[a].value.data(), gb.data(), n);
        }
    });
}

NodeId Tape::concat(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw dim_error("concat: no parts");
    std::size_t total = 0;
    bool req = false;
    for (NodeId p : parts) {
        check_id(p, "concat");
        const Tensor& tp = nodes_[p].value;
        if (tp.rank() != 1) throw dim_error("concat: rank-1 parts required");
        total += tp.size();
        req = req || rg(p);
    }
    Tensor out = Tensor::zeros({total});
    std::size_t off = 0;
    for (NodeId p : parts) {
        const Tensor& tp = nodes_[p].value;
        std::memcpy(out.data() + off, tp.data(), tp.size() * sizeof(double));
        off += tp.size();
    }
    return push(std::move(out), req, "concat",
                [parts](Tape& t, NodeId self) {
                    const Tensor& g = t.nodes_[self].grad;
                    std::size_t off = 0;
                    for (NodeId p : parts) {
                        const std::size_t n = t.nodes_[p].value.size();
                        t.accum(p, g.data() + off, n);
                        off += n;
                    }
                });
}

NodeId Tape::concat_cols(NodeId a, NodeId b) {
    check_id(a, "concat_cols");
    check_id(b, "concat_cols");
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[b].value;
    if (ta.rank() != 2 || tb.rank() != 2 || ta.rows() != tb.rows())
        throw dim_error("concat_cols: " + ta.shape_str() + " vs " + tb.shape_str());
    const std::size_t m = ta.rows(), ca = ta.cols(), cb = tb.cols();
    Tensor out = Tensor::zeros({m, ca + cb});
    for (std::size_t i = 0; i < m; ++i) {
        std::memcpy(out.data() + i * (ca + cb), ta.data() + i * ca, ca * sizeof(double));
        std::memcpy(out.data() + i * (ca + cb) + ca, tb.data() + i * cb,
                    cb * sizeof(double));
    }
    return push(std::move(out), rg(a) || rg(b), "concat_cols",
                [a, b, m, ca, cb](Tape& t, NodeId self) {
                    const Tensor& g = t.nodes_[self].grad;
                    if (t.rg(a)) {
                        Tensor& ga = t.ensure_grad(a);
                        for (std::size_t i = 0; i < m; ++i)
                            kern::ops().vadd(ga.data() + i * ca,
                                             g.data() + i * (ca + cb),
                                             ga.data() + i * ca, ca);
                    }
                    if (t.rg(b)) {
                        Tensor& gb = t.ensure_grad(b);
                        for (std::size_t i = 0; i < m; ++i)
                            kern::ops().vadd(gb.data() + i * cb,
                                             g.data() + i * (ca + cb) + ca,
                                             gb.data() + i * cb, cb);
                    }
                });
}

NodeId Tape::stack_rows(const std::vector<NodeId>& parts) {
    if (parts.empty()) throw dim_error("stack_rows: no parts");
    check_id(parts[0], "stack_rows");
    const std::size_t d = nodes_[parts[0]].value.size();
    bool req = false;
    for (NodeId p : parts) {
        check_id(p, "stack_rows");
        const Tensor& tp = nodes_[p].value;
        if (tp.rank() != 1 || tp.size() != d)
            throw dim_error("stack_rows: inconsistent row length");
        req = req || rg(p);
    }
    Tensor out = Tensor::zeros({parts.size(), d});
    for (std::size_t i = 0; i < parts.size(); ++i)
        std::memcpy(out.data() + i * d, nodes_[parts[i]].value.data(),
                    d * sizeof(double));
    return push(std::move(out), req, "stack_rows",
                [parts, d](Tape& t, NodeId self) {
                    const Tensor& g = t.nodes_[self].grad;
                    for (std::size_t i = 0; i < parts.size(); ++i)
                        t.accum(parts[i], g.data() + i * d, d);
                });
}

NodeId Tape::gather_rows(NodeId x, std::vector<std::size_t> idx) {
    check_id(x, "gather_rows");
    const Tensor& tx = nodes_[x].value;
    if (tx.rank() != 2) throw dim_error("gather_rows: rank-2 input required");
    const std::size_t c = tx.cols();
    for (std::size_t r : idx)
        if (r >= tx.rows()) throw dim_error("gather_rows: row index out of range");
    Tensor out = Tensor::zeros({idx.size(), c});
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::memcpy(out.data() + i * c, tx.data() + idx[i] * c, c * sizeof(double));
    return push(std::move(out), rg(x), "gather_rows",
                [x, idx = std::move(idx), c](Tape& t, NodeId self) {
                    if (!t.rg(x)) return;
                    const Tensor& g = t.nodes_[self].grad;
                    Tensor& gx = t.ensure_grad(x);
                    for (std::size_t i = 0; i < idx.size(); ++i)
                        kern::ops().vadd(gx.data() + idx[i] * c, g.data() + i * c,
                                         gx.data() + idx[i] * c, c);
                });
}

NodeId Tape::gather_elems(NodeId x, std::vector<std::size_t> idx) {
    check_id(x, "gather_elems");
    const Tensor& tx = nodes_[x].value;
    if (tx.rank() != 1) throw dim_error("gather_elems: rank-1 input required");
    for (std::size_t i : idx)
        if (i >= tx.size()) throw dim_error("gather_elems: index out of range");
    Tensor out = Tensor::zeros({idx.size()});
    for (std::size_t i = 0; i < idx.size(); ++i) out.data()[i] = tx.at(idx[i]);
    return push(std::move(out), rg(x), "gather_elems",
                [x, idx = std::move(idx)](Tape& t, NodeId self) {
                    if (!t.rg(x)) return;
                    const Tensor& g = t.nodes_[self].grad;
                    Tensor& gx = t.ensure_grad(x);
                    for (std::size_t i = 0; i < idx.size(); ++i)
                        gx.data()[idx[i]] += g.at(i);
                });
}

NodeId Tape::relu(NodeId x) {
    check_id(x, "relu");
    const Tensor& tx = nodes_[x].value;
    Tensor out = Tensor::zeros(tx.shape());
    kern::ops().vrelu(tx.data(), out.data(), tx.size());
    return push(std::move(out), rg(x), "relu", [x](Tape& t, NodeId self) {
        if (!t.rg(x)) return;
        const Tensor& g = t.nodes_[self].grad;
        Tensor& gx = t.ensure_grad(x);
        kern::ops().vrelu_bwd(t.nodes_[x].value.data(), g.data(), gx.data(), g.size());
    });
}

NodeId Tape::leaky_relu(NodeId x, double slope) {
    check_id(x, "leaky_relu");
    const Tensor& tx = nodes_[x].value;
    Tensor out = Tensor::zeros(tx.shape());
    kern::ops().vleaky(tx.data(), slope, out.data(), tx.size());
    return push(std::move(out), rg(x), "leaky_relu", [x, slope](Tape& t, NodeId self) {
        if (!t.rg(x)) return;
        const Tensor& g = t.nodes_[self].grad;
        Tensor& gx = t.ensure_grad(x);
        kern::ops().vleaky_bwd(t.nodes_[x].value.data(), slope, g.data(), gx.data(),
                               g.size());
    });
}

NodeId Tape::sigmoid(NodeId x) {
    check_id(x, "sigmoid");
    const Tensor& tx = nodes_[x].value;
    Tensor out = Tensor::zeros(tx.shape());
    for (std::size_t i = 0; i < tx.size(); ++i)
        out.data()[i] = stable_sigmoid(tx.at(i));
    return push(std::move(out), rg(x), "sigmoid", [x](Tape& t, NodeId self) {
        if (!t.rg(x)) return;
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& y = t.nodes_[self].value;
        Tensor& gx = t.ensure_grad(x);
        for (std::size_t i = 0; i < g.size(); ++i)
            gx.data()[i] += g.at(i) * y.at(i) * (1.0 - y.at(i));
    });
}

NodeId Tape::log_(NodeId x) {
    check_id(x, "log");
    const Tensor& tx = nodes_[x].value;
    Tensor out = Tensor::zeros(tx.shape());
    for (std::size_t i = 0; i < tx.size(); ++i) {
        if (tx.at(i) <= 0.0) throw numeric_error("log of non-positive value");
        out.data()[i] = std::log(tx.at(i));
    }
    return push(std::move(out), rg(x), "log", [x](Tape& t, NodeId self) {
        if (!t.rg(x)) return;
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& xv = t.nodes_[x].value;
        Tensor& gx = t.ensure_grad(x);
        for (std::size_t i = 0; i < g.size(); ++i) gx.data()[i] += g.at(i) / xv.at(i);
    });
}

NodeId Tape::abs_(NodeId x) {
    check_id(x, "abs");
    const Tensor& tx = nodes_[x].value;
    Tensor out = Tensor::zeros(tx.shape());
    for (std::size_t i = 0; i < tx.size(); ++i) out.data()[i] = std::fabs(tx.at(i));
    return push(std::move(out), rg(x), "abs", [x](Tape& t, NodeId self) {
        if (!t.rg(x)) return;
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& xv = t.nodes_[x].value;
        Tensor& gx = t.ensure_grad(x);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double s = xv.at(i) > 0.0 ? 1.0 : (xv.at(i) < 0.0 ? -1.0 : 0.0);
            gx.data()[i] += g.at(i) * s;
        }
    });
}

NodeId Tape::sum(NodeId x) {
    check_id(x, "sum");
    const Tensor& tx = nodes_[x].value;
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (std::size_t i = 0; i < tx.size(); ++i) {
        switch (i % 4) {
            case 0: s0 += tx.at(i); break;
            case 1: s1 += tx.at(i); break;
            case 2: s2 += tx.at(i); break;
            default: s3 += tx.at(i); break;
        }
    }
    Tensor out = Tensor::scalar((s0 + s1) + (s2 + s3));
    return push(std::move(out), rg(x), "sum", [x](Tape& t, NodeId self) {
        if (!t.rg(x)) return;
        const double g = t.nodes_[self].grad.item();
        Tensor& gx = t.ensure_grad(x);
        for (std::size_t i = 0; i < gx.size(); ++i) gx.data()[i] += g;
    });
}

NodeId Tape::masked_softmax(NodeId scores, const std::vector<bool>& mask) {
    check_id(scores, "masked_softmax");
    const Tensor& ts = nodes_[scores].value;
    if (ts.rank() != 1) throw dim_error("masked_softmax: rank-1 scores required");
    if (mask.size() != ts.size())
        throw dim_error("masked_softmax: mask length mismatch");
    bool any = false;
    double mx = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        if (!any || ts.at(i) > mx) mx = ts.at(i);
        any = true;
    }
    if (!any) throw dim_error("masked_softmax: empty neighborhood (all-false mask)");

    Tensor out = Tensor::zeros(ts.shape());
    double z = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        out.data()[i] = std::exp(ts.at(i) - mx);
        z += out.at(i);
    }
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) out.data()[i] /= z;

    return push(std::move(out), rg(scores), "masked_softmax",
                [scores, mask](Tape& t, NodeId self) {
                    if (!t.rg(scores)) return;
                    const Tensor& g = t.nodes_[self].grad;
                    const Tensor& y = t.nodes_[self].value;
                    Tensor& gs = t.ensure_grad(scores);
                    const double dotgy =
                        kern::ops().dot4(g.data(), y.data(), g.size());
                    for (std::size_t i = 0; i < g.size(); ++i)
                        if (mask[i]) gs.data()[i] += y.at(i) * (g.at(i) - dotgy);
                });
}

NodeId Tape::add_bias(NodeId x, NodeId bias) {
    check_id(x, "add_bias");
    check_id(bias, "add_bias");
    const Tensor& tx = nodes_[x].value;
    const Tensor& tb = nodes_[bias].value;
    if (tx.rank() != 2 || tb.rank() != 1 || tb.size() != tx.cols())
        throw dim_error("add_bias: " + tx.shape_str() + " + " + tb.shape_str());
    const std::size_t m = tx.rows(), n = tx.cols();
    Tensor out = Tensor::zeros(tx.shape());
    for (std::size_t i = 0; i < m; ++i)
        kern::ops().vadd(tx.data() + i * n, tb.data(), out.data() + i * n, n);
    return push(std::move(out), rg(x) || rg(bias), "add_bias",
                [x, bias, m, n](Tape& t, NodeId self) {
                    const Tensor& g = t.nodes_[self].grad;
                    t.accum(x, g.data(), g.size());
                    if (t.rg(bias)) {
                        Tensor& gb = t.ensure_grad(bias);
                        for (std::size_t i = 0; i < m; ++i)
                            kern::ops().vadd(gb.data(), g.data() + i * n, gb.data(), n);
                    }
                });
}

NodeId Tape::conv1d_same(NodeId x, NodeId f) {
    check_id(x, "conv1d_same");
    check_id(f, "conv1d_same");
    const Tensor& tx = nodes_[x].value;
    const Tensor& tf = nodes_[f].value;
    if (tx.rank() != 2 || tf.rank() != 1)
        throw dim_error("conv1d_same: need (rows x w) input and rank-1 kernel");
    const std::size_t m = tx.rows(), w = tx.cols(), k = tf.size();
    if (k < 1 || k > w)
        throw config_error("conv1d_same: kernel size " + std::to_string(k) +
                           " outside [1, " + std::to_string(w) + "]");
    Tensor out = Tensor::zeros(tx.shape());
    for (std::size_t i = 0; i < m; ++i) {
        const double* xr = tx.data() + i * w;
        double* yr = out.data() + i * w;
        for (std::size_t s = 0; s < w; ++s) {
            double acc = 0.0;
            const std::size_t lmax = std::min(k, w - s);
            for (std::size_t l = 0; l < lmax; ++l) acc += xr[s + l] * tf.at(l);
            yr[s] = acc;
        }
    }
    return push(std::move(out), rg(x) || rg(f), "conv1d_same",
                [x, f, m, w, k](Tape& t, NodeId self) {
                    const Tensor& g = t.nodes_[self].grad;
                    const Tensor& xv = t.nodes_[x].value;
                    const Tensor& fv = t.nodes_[f].value;
                    if (t.rg(x)) {
                        Tensor& gx = t.ensure_grad(x);
                        for (std::size_t i = 0; i < m; ++i) {
                            const double* gr = g.data() + i * w;
                            double* gxr = gx.data() + i * w;
                            for (std::size_t s = 0; s < w; ++s) {
                                const std::size_t lmax = std::min(k, w - s);
                                for (std::size_t l = 0; l < lmax; ++l)
                                    gxr[s + l] += gr[s] * fv.at(l);
                            }
                        }
                    }
                    if (t.rg(f)) {
                        Tensor& gf = t.ensure_grad(f);
                        for (std::size_t i = 0; i < m; ++i) {
                            const double* gr = g.data() + i * w;
                            const double* xr = xv.data() + i * w;
                            for (std::size_t s = 0; s < w; ++s) {
                                const std::size_t lmax = std::min(k, w - s);
                                for (std::size_t l = 0; l < lmax; ++l)
                                    gf.data()[l] += gr[s] * xr[s + l];
                            }
                        }
                    }
                });
}

NodeId Tape::emax(NodeId a, NodeId b) {
    check_id(a, "emax");
    check_id(b, "emax");
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[b].value;
    if (!ta.same_shape(tb))
        throw dim_error("emax: shape mismatch " + ta.shape_str() + " vs " +
                        tb.shape_str());
    Tensor out = Tensor::zeros(ta.shape());
    for (std::size_t i = 0; i < ta.size(); ++i)
        out.data()[i] = ta.at(i) >= tb.at(i) ? ta.at(i) : tb.at(i);
    return push(std::move(out), rg(a) || rg(b), "emax", [a, b](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& av = t.nodes_[a].value;
        const Tensor& bv = t.nodes_[b].value;
        if (t.rg(a)) {
            Tensor& ga = t.ensure_grad(a);
            for (std::size_t i = 0; i < g.size(); ++i)
                if (av.at(i) >= bv.at(i)) ga.data()[i] += g.at(i);
        }
        if (t.rg(b)) {
            Tensor& gb = t.ensure_grad(b);
            for (std::size_t i = 0; i < g.size(); ++i)
                if (av.at(i) < bv.at(i)) gb.data()[i] += g.at(i);
        }
    });
}

NodeId Tape::reshape(NodeId x, std::vector<std::size_t> shape) {
    check_id(x, "reshape");
    const Tensor& tx = nodes_[x].value;
    Tensor out(shape, tx.values());
    return push(std::move(out), rg(x), "reshape", [x](Tape& t, NodeId self) {
        const Tensor& g = t.nodes_[self].grad;
        t.accum(x, g.data(), g.size());
    });
}

NodeId Tape::binary_entropy(NodeId m) {
    check_id(m, "binary_entropy");
    const Tensor& tm = nodes_[m].value;
    const double lo = 1e-12, hi = 1.0 - 1e-12;
    Tensor out = Tensor::zeros(tm.shape());
    for (std::size_t i = 0; i < tm.size(); ++i) {
        const double p = std::clamp(tm.at(i), lo, hi);
        out.data()[i] = -(p * std::log(p) + (1.0 - p) * std::log(1.0 - p));
    }
    return push(std::move(out), rg(m), "binary_entropy", [m](Tape& t, NodeId self) {
        if (!t.rg(m)) return;
        const double lo = 1e-12, hi = 1.0 - 1e-12;
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& mv = t.nodes_[m].value;
        Tensor& gm = t.ensure_grad(m);
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double p = std::clamp(mv.at(i), lo, hi);
            gm.data()[i] += g.at(i) * std::log((1.0 - p) / p);
        }
    });
}

NodeId Tape::bce_with_logits(NodeId logit, double target) {
    check_id(logit, "bce_with_logits");
    const Tensor& ts = nodes_[logit].value;
    if (ts.size() != 1) throw dim_error("bce_with_logits: scalar logit required");
    const double s = ts.item();
    const double loss =
        (s > 0.0 ? s : 0.0) - s * target + std::log1p(std::exp(-std::fabs(s)));
    return push(Tensor::scalar(loss), rg(logit), "bce_with_logits",
                [logit, target](Tape& t, NodeId self) {
                    if (!t.rg(logit)) return;
                    const double g = t.nodes_[self].grad.item();
                    const double s = t.nodes_[logit].value.item();
                    Tensor& gs = t.ensure_grad(logit);
                    gs.data()[0] += g * (stable_sigmoid(s) - target);
                });
}

void Tape::backward(NodeId loss) {
    check_id(loss, "backward");
    if (nodes_[loss].value.size() != 1)
        throw dim_error("backward: loss must be scalar");
    ensure_grad(loss).data()[0] = 1.0;
    for (NodeId id = loss; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
        n.backward(*this, id);
    }
}

const Tensor& Tape::value(NodeId id) const {
    check_id(id, "value");
    return nodes_[id].value;
}

const Tensor& Tape::grad(NodeId id) {
    check_id(id, "grad");
    if (!nodes_[id].requires_grad)
        throw state_error("grad: node " + std::to_string(id) +
                          " does not require gradients");
    return ensure_grad(id);
}

}  // namespace beta
