#include "logan/tape.hpp"

#include <algorithm>
#include <cassert>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace logan {

namespace {
constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
}

Var operator+(Var a, Var b) {
    assert(a.tape == b.tape);
    return a.tape->add(a, b);
}
Var operator-(Var a, Var b) {
    assert(a.tape == b.tape);
    return a.tape->sub(a, b);
}
Var operator*(Var a, Var b) {
    assert(a.tape == b.tape);
    return a.tape->mul(a, b);
}
Var operator/(Var a, Var b) {
    assert(a.tape == b.tape);
    return a.tape->div(a, b);
}
Var operator-(Var a) { return a.tape->neg(a); }

void Tape::domain_error(const char* op, double value) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s: argument %.17g outside the operation's domain", op, value);
    throw std::domain_error(buf);
}

void Tape::grow() {
    if (nodes_.size() >= kMaxNodes) {
        throw std::length_error(
            "tape: node limit (2^24) exceeded; rewind between updates or reduce the batch size");
    }
    std::size_t cap = nodes_.empty() ? (std::size_t{1} << 16) : nodes_.size() * 2;
    nodes_.resize(cap < kMaxNodes ? cap : kMaxNodes);
}

void Tape::check_input(Var v, const char* what) const {
    if (v.tape != this || v.id >= count_) {
        throw std::invalid_argument(std::string(what) + ": Var does not belong to this tape");
    }
}

void Tape::rewind(Mark m) {
    if (m.owner != this) throw std::invalid_argument("rewind: mark was taken from another tape");
    if (m.nodes > count_ || m.aux > aux_.size()) {
        throw std::invalid_argument("rewind: mark is past the end of the tape");
    }
    count_ = m.nodes;
    aux_.resize(m.aux);
}

std::vector<double> Tape::gradients(Var output, std::span<const Var> inputs) {
    check_input(output, "gradients output");
    for (Var v : inputs) check_input(v, "gradients input");

    // adj_ is all zeros on entry; the sweep re-zeroes every entry it visits,
    // so no O(tape) clear is needed per call.
    if (adj_.size() < count_) adj_.resize(count_, 0.0);
    adj_[output.id] = 1.0;

    // Input gradients are collected as the sweep passes each id (the slot is
    // zeroed immediately after). Sorted descending to match the sweep order.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pending;
    pending.reserve(inputs.size());
    for (std::uint32_t k = 0; k < inputs.size(); ++k) {
        if (inputs[k].id <= output.id) pending.emplace_back(inputs[k].id, k);
    }
    std::sort(pending.begin(), pending.end(), std::greater<>());
    std::size_t next = 0;

    std::vector<double> out(inputs.size(), 0.0);
    const Node* nodes = nodes_.data();
    for (std::uint32_t i = output.id;; --i) {
        const double g = adj_[i];
        adj_[i] = 0.0;
        while (next < pending.size() && pending[next].first == i) {
            out[pending[next].second] = g;
            ++next;
        }
        if (g != 0.0) {
            const Node& n = nodes[i];
            const std::uint32_t a = n.a();
            switch (n.op()) {
                case Op::Const:
                    break;
                case Op::Add:
                    adj_[a] += g;
                    adj_[n.b] += g;
                    break;
                case Op::Sub:
                    adj_[a] += g;
                    adj_[n.b] -= g;
                    break;
                case Op::Mul:
                    adj_[a] += g * nodes[n.b].value;
                    adj_[n.b] += g * nodes[a].value;
                    break;
                case Op::Div: {
                    const double q = g / nodes[n.b].value;
                    adj_[a] += q;
                    adj_[n.b] -= q * n.value;
                    break;
                }
                case Op::Neg:
                    adj_[a] -= g;
                    break;
                case Op::Exp:
                    adj_[a] += g * n.value;
                    break;
                case Op::Log:
                    adj_[a] += g / nodes[a].value;
                    break;
                case Op::Sqrt:
                    adj_[a] += g / (2.0 * n.value);
                    break;
                case Op::Square:
                    adj_[a] += g * 2.0 * nodes[a].value;
                    break;
                case Op::Abs: {
                    const double v = nodes[a].value;
                    // Subgradient 0 at the kink.
                    adj_[a] += v > 0.0 ? g : (v < 0.0 ? -g : 0.0);
                    break;
                }
                case Op::Max:
                    adj_[nodes[a].value >= nodes[n.b].value ? a : n.b] += g;
                    break;
                case Op::Sigmoid: {
                    const double s = n.value;
                    adj_[a] += g * s * (1.0 - s);
                    break;
                }
                case Op::Logit: {
                    const double p = nodes[a].value;
                    adj_[a] += g / (p * (1.0 - p));
                    break;
                }
                case Op::Tanh: {
                    const double t = n.value;
                    adj_[a] += g * (1.0 - t * t);
                    break;
                }
                case Op::LeakyRelu:
                    adj_[a] += nodes[a].value >= 0.0 ? g : g * aux_[n.b];
                    break;
                case Op::ClampProb: {
                    const double v = nodes[a].value;
                    if (v >= kProbClampLo && v <= kProbClampHi) adj_[a] += g;
                    break;
                }
                case Op::FmaPrev:
                    adj_[a] += g * nodes[n.b].value;
                    adj_[n.b] += g * nodes[a].value;
                    adj_[i - 1] += g;
                    break;
                case Op::MulConst:
                    adj_[a] += g * aux_[n.b];
                    break;
                case Op::AddConst:
                    adj_[a] += g;
                    break;
            }
        }
        if (i == 0) break;
    }
    return out;
}

std::vector<Var> Tape::gradients_recorded(Var output, std::span<const Var> inputs) {
    check_input(output, "gradients_recorded output");
    for (Var v : inputs) check_input(v, "gradients_recorded input");
    if (inputs.empty()) return {};

    std::uint32_t lo = output.id;
    for (Var v : inputs) lo = v.id < lo ? v.id : lo;
    const std::uint32_t hi = output.id;
    const std::size_t span = static_cast<std::size_t>(hi - lo) + 1;

    // Forward sweep: mark nodes reachable from the inputs. Parents below `lo`
    // cannot be reachable, so the sweep stays inside [lo, hi].
    active_.assign(span, 0);
    for (Var v : inputs) active_[v.id - lo] = 1;
    for (std::uint32_t i = lo; i <= hi; ++i) {
        const Node& n = nodes_[i];
        const Op op = n.op();
        if (op == Op::Const || active_[i - lo]) continue;
        const std::uint32_t a = n.a();
        bool act = a >= lo && active_[a - lo];
        switch (op) {
            case Op::Add:
            case Op::Sub:
            case Op::Mul:
            case Op::Div:
            case Op::Max:
                act = act || (n.b >= lo && active_[n.b - lo]);
                break;
            case Op::FmaPrev:
                // i > lo whenever the implicit parent i-1 exists in range.
                act = act || (n.b >= lo && active_[n.b - lo]) || (i > lo && active_[i - 1 - lo]);
                break;
            default:
                break;
        }
        active_[i - lo] = act ? 1 : 0;
    }

    std::vector<Var> result(inputs.size());
    if (!active_[hi - lo]) {
        // Output does not depend on any input: all gradients are zero.
        for (auto& r : result) r = lift(0.0);
        return result;
    }

    adj_var_.assign(span, kNone);
    const Var one = lift(1.0);
    adj_var_[hi - lo] = one.id;

    auto var_of = [this](std::uint32_t id) { return Var{this, id, nodes_[id].value}; };
    auto is_active = [this, lo](std::uint32_t id) { return id >= lo && active_[id - lo]; };
    // adj[p] += v
    auto acc = [this, lo, var_of](std::uint32_t p, Var v) {
        std::uint32_t& slot = adj_var_[p - lo];
        slot = slot == kNone ? v.id : add(var_of(slot), v).id;
    };
    // adj[p] -= v
    auto acc_neg = [this, lo, var_of](std::uint32_t p, Var v) {
        std::uint32_t& slot = adj_var_[p - lo];
        slot = slot == kNone ? neg(v).id : sub(var_of(slot), v).id;
    };
    // adj[p] += g*w
    auto acc_mul = [this, lo, var_of](std::uint32_t p, Var g, Var w) {
        std::uint32_t& slot = adj_var_[p - lo];
        slot = slot == kNone ? mul(g, w).id : add(var_of(slot), mul(g, w)).id;
    };
    auto acc_mul_const = [this, lo, var_of](std::uint32_t p, Var g, double k) {
        std::uint32_t& slot = adj_var_[p - lo];
        slot = slot == kNone ? mul_const(g, k).id : add(var_of(slot), mul_const(g, k)).id;
    };

    for (std::uint32_t i = hi;; --i) {
        if (active_[i - lo] && adj_var_[i - lo] != kNone) {
            // Copy, not reference: emission may reallocate nodes_.
            const Node n = nodes_[i];
            const std::uint32_t a = n.a();
            const Var g = var_of(adj_var_[i - lo]);
            switch (n.op()) {
                case Op::Const:
                    break;
                case Op::Add:
                    if (is_active(a)) acc(a, g);
                    if (is_active(n.b)) acc(n.b, g);
                    break;
                case Op::Sub:
                    if (is_active(a)) acc(a, g);
                    if (is_active(n.b)) acc_neg(n.b, g);
                    break;
                case Op::Mul:
                    if (is_active(a)) acc_mul(a, g, var_of(n.b));
                    if (is_active(n.b)) acc_mul(n.b, g, var_of(a));
                    break;
                case Op::Div: {
                    const Var q = div(g, var_of(n.b));
                    if (is_active(a)) acc(a, q);
                    if (is_active(n.b)) acc_neg(n.b, mul(q, var_of(i)));
                    break;
                }
                case Op::Neg:
                    acc_neg(a, g);
                    break;
                case Op::Exp:
                    acc_mul(a, g, var_of(i));
                    break;
                case Op::Log:
                    acc(a, div(g, var_of(a)));
                    break;
                case Op::Sqrt:
                    acc(a, div(g, mul_const(var_of(i), 2.0)));
                    break;
                case Op::Square:
                    acc_mul(a, g, mul_const(var_of(a), 2.0));
                    break;
                case Op::Abs: {
                    const double v = nodes_[a].value;
                    if (v != 0.0) acc_mul_const(a, g, v > 0.0 ? 1.0 : -1.0);
                    break;
                }
                case Op::Max:
                    acc(nodes_[a].value >= nodes_[n.b].value ? a : n.b, g);
                    break;
                case Op::Sigmoid: {
                    const Var s = var_of(i);
                    acc_mul(a, g, sub(s, square(s)));
                    break;
                }
                case Op::Logit: {
                    const Var p = var_of(a);
                    acc(a, div(g, sub(p, square(p))));
                    break;
                }
                case Op::Tanh: {
                    const Var t = var_of(i);
                    acc_mul(a, g, add_const(mul_const(square(t), -1.0), 1.0));
                    break;
                }
                case Op::LeakyRelu:
                    acc_mul_const(a, g, nodes_[a].value >= 0.0 ? 1.0 : aux_[n.b]);
                    break;
                case Op::ClampProb: {
                    const double v = nodes_[a].value;
                    if (v >= kProbClampLo && v <= kProbClampHi) acc(a, g);
                    break;
                }
                case Op::FmaPrev:
                    if (is_active(a)) acc_mul(a, g, var_of(n.b));
                    if (is_active(n.b)) acc_mul(n.b, g, var_of(a));
                    if (is_active(i - 1)) acc(i - 1, g);
                    break;
                case Op::MulConst:
                    acc_mul_const(a, g, aux_[n.b]);
                    break;
                case Op::AddConst:
                    acc(a, g);
                    break;
            }
        }
        if (i == lo) break;
    }

    for (std::size_t k = 0; k < inputs.size(); ++k) {
        const std::uint32_t slot = adj_var_[inputs[k].id - lo];
        result[k] = slot == kNone ? lift(0.0) : var_of(slot);
    }
    return result;
}

std::vector<double> Tape::replay_values() const {
    std::vector<double> v(count_);
    for (std::size_t i = 0; i < count_; ++i) {
        const Node& n = nodes_[i];
        const std::uint32_t a = n.a();
        switch (n.op()) {
            case Op::Const: v[i] = n.value; break;
            case Op::Add: v[i] = v[a] + v[n.b]; break;
            case Op::Sub: v[i] = v[a] - v[n.b]; break;
            case Op::Mul: v[i] = v[a] * v[n.b]; break;
            case Op::Div: v[i] = v[a] / v[n.b]; break;
            case Op::Neg: v[i] = -v[a]; break;
            case Op::Exp: v[i] = std::exp(v[a]); break;
            case Op::Log: v[i] = std::log(v[a]); break;
            case Op::Sqrt: v[i] = std::sqrt(v[a]); break;
            case Op::Square: v[i] = v[a] * v[a]; break;
            case Op::Abs: v[i] = v[a] < 0.0 ? -v[a] : v[a]; break;
            case Op::Max: v[i] = v[a] >= v[n.b] ? v[a] : v[n.b]; break;
            case Op::Sigmoid: v[i] = sigmoid_value(v[a]); break;
            case Op::Logit: v[i] = std::log(v[a] / (1.0 - v[a])); break;
            case Op::Tanh: v[i] = std::tanh(v[a]); break;
            case Op::LeakyRelu: v[i] = v[a] >= 0.0 ? v[a] : aux_[n.b] * v[a]; break;
            case Op::ClampProb: {
                double p = v[a];
                if (p < kProbClampLo) p = kProbClampLo;
                if (p > kProbClampHi) p = kProbClampHi;
                v[i] = p;
                break;
            }
            case Op::FmaPrev: v[i] = v[a] * v[n.b] + v[i - 1]; break;
            case Op::MulConst: v[i] = v[a] * aux_[n.b]; break;
            case Op::AddConst: v[i] = v[a] + aux_[n.b]; break;
        }
    }
    return v;
}

}  // namespace logan
