// Scalar tape for reverse-mode differentiation.
//
// Every elementary operation appends one node holding {op, parent ids, primal
// value}. Node ids grow monotonically and parents always precede children, so
// a single reverse sweep computes adjoints. gradients() returns plain doubles;
// gradients_recorded() emits the adjoint computation itself as tape nodes, so
// a gradient can appear inside a loss and be differentiated again (the double
// backprop needed by gradient penalties).
//
// Nodes are 16 bytes: the op shares a word with the first parent id, scalar
// attachments (leaky slope, constant factors) live in a side table indexed by
// the second parent slot, and a*b+c is recorded either as Mul+Add or as a
// chained FmaPrev whose third parent is implicitly the previous node. Both
// encodings compute round(round(a*b)+c), so values do not depend on which one
// was picked. A tape is capped at 2^24 nodes; training loops rewind the tape
// every update, so per-update graphs stay far below that.
//
// A tape is single-threaded. It may be moved across threads but never shared.
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace logan {

class Tape;

// Handle to one tape node. Only valid together with the tape that created it.
struct Var {
    Tape* tape = nullptr;
    std::uint32_t id = 0;
    double value = 0.0;
};

enum class Op : std::uint8_t {
    Const,
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Exp,
    Log,
    Sqrt,
    Square,
    Abs,
    Max,
    Sigmoid,
    Logit,
    Tanh,
    LeakyRelu,   // aux = negative-side slope
    ClampProb,   // clamp to [kProbClampLo, kProbClampHi], derivative 0 outside
    FmaPrev,     // a*b + previous node
    MulConst,    // a * aux
    AddConst,    // a + aux
};

// Probability clamp bounds used before log/logit (documented helper; logit
// itself never clamps so that logit(sigmoid(x)) stays an exact inverse pair).
inline constexpr double kProbClampLo = 1e-7;
inline constexpr double kProbClampHi = 1.0 - 1e-7;

class Tape {
public:
    struct Node {
        std::uint32_t op_a;  // op in the top byte, first parent id in the low 24 bits
        std::uint32_t b;     // second parent id, or aux-table index
        double value;

        Op op() const { return static_cast<Op>(op_a >> 24); }
        std::uint32_t a() const { return op_a & 0xFFFFFF; }
    };
    static_assert(sizeof(Node) == 16);

    struct Mark {
        const Tape* owner = nullptr;
        std::size_t nodes = 0;
        std::size_t aux = 0;
    };

    explicit Tape(std::size_t reserve_hint = 0) {
        if (reserve_hint) nodes_.resize(reserve_hint < kMaxNodes ? reserve_hint : kMaxNodes);
    }
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    std::size_t size() const { return count_; }
    const Node& node(std::uint32_t id) const { return nodes_[id]; }
    double aux_of(const Node& n) const { return aux_[n.b]; }

    Var lift(double value) { return push(Op::Const, 0, 0, value); }

    Var add(Var a, Var b) { return push(Op::Add, a.id, b.id, a.value + b.value); }
    Var sub(Var a, Var b) { return push(Op::Sub, a.id, b.id, a.value - b.value); }
    Var mul(Var a, Var b) { return push(Op::Mul, a.id, b.id, a.value * b.value); }
    Var div(Var a, Var b) {
        if (b.value == 0.0) domain_error("div", 0.0);
        return push(Op::Div, a.id, b.id, a.value / b.value);
    }
    Var neg(Var a) { return push(Op::Neg, a.id, 0, -a.value); }
    Var exp(Var a) { return push(Op::Exp, a.id, 0, std::exp(a.value)); }
    Var ln(Var a) {
        if (!(a.value > 0.0)) domain_error("ln", a.value);
        return push(Op::Log, a.id, 0, std::log(a.value));
    }
    Var sqrt(Var a) {
        if (!(a.value > 0.0)) domain_error("sqrt", a.value);
        return push(Op::Sqrt, a.id, 0, std::sqrt(a.value));
    }
    Var square(Var a) { return push(Op::Square, a.id, 0, a.value * a.value); }
    Var abs(Var a) { return push(Op::Abs, a.id, 0, a.value < 0.0 ? -a.value : a.value); }
    Var max(Var a, Var b) {
        return push(Op::Max, a.id, b.id, a.value >= b.value ? a.value : b.value);
    }
    Var sigmoid(Var a) { return push(Op::Sigmoid, a.id, 0, sigmoid_value(a.value)); }
    Var logit(Var a) {
        if (!(a.value > 0.0 && a.value < 1.0)) domain_error("logit", a.value);
        return push(Op::Logit, a.id, 0, std::log(a.value / (1.0 - a.value)));
    }
    Var tanh(Var a) { return push(Op::Tanh, a.id, 0, std::tanh(a.value)); }
    Var leaky_relu(Var a, double slope) {
        return push(Op::LeakyRelu, a.id, push_aux(slope),
                    a.value >= 0.0 ? a.value : slope * a.value);
    }
    Var clamp_prob(Var a) {
        double v = a.value;
        if (v < kProbClampLo) v = kProbClampLo;
        if (v > kProbClampHi) v = kProbClampHi;
        return push(Op::ClampProb, a.id, 0, v);
    }
    // a*b + c, recorded as FmaPrev when c is the newest node, else as Mul+Add.
    Var fma(Var a, Var b, Var c) {
        if (c.id + 1 == count_) {
            return push(Op::FmaPrev, a.id, b.id, a.value * b.value + c.value);
        }
        return add(mul(a, b), c);
    }
    Var mul_const(Var a, double k) { return push(Op::MulConst, a.id, push_aux(k), a.value * k); }
    Var add_const(Var a, double k) { return push(Op::AddConst, a.id, push_aux(k), a.value + k); }

    // d(output)/d(input) for each input, as plain doubles. Inputs may be any
    // nodes of this tape (usually leaves). Stored primal values are untouched.
    std::vector<double> gradients(Var output, std::span<const Var> inputs);

    // Same sweep, but each adjoint is emitted as tape nodes, so the returned
    // gradients are Vars and a further backward differentiates through them.
    // Only the subgraph reachable from `inputs` is swept.
    std::vector<Var> gradients_recorded(Var output, std::span<const Var> inputs);

    Mark mark() const { return Mark{this, count_, aux_.size()}; }
    void rewind(Mark m);

    // Recomputes every node value from the recorded structure; used to check
    // that replaying the tape reproduces stored primals bit-exactly.
    std::vector<double> replay_values() const;

    static double sigmoid_value(double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        double e = std::exp(x);
        return e / (1.0 + e);
    }

private:
    static constexpr std::size_t kMaxNodes = std::size_t{1} << 24;

    // The node store is an arena (nodes_.size() is capacity, count_ is the
    // logical size): a raw indexed store is several times cheaper here than
    // vector::push_back in the graph-building hot loop.
    Var push(Op op, std::uint32_t a, std::uint32_t b, double value) {
        if (count_ == nodes_.size()) grow();
        const std::uint32_t id = static_cast<std::uint32_t>(count_++);
        nodes_[id] = Node{(static_cast<std::uint32_t>(op) << 24) | a, b, value};
        return Var{this, id, value};
    }
    std::uint32_t push_aux(double v) {
        aux_.push_back(v);
        return static_cast<std::uint32_t>(aux_.size() - 1);
    }

    void grow();  // doubles the arena; throws once the 2^24 id space is full
    void check_input(Var v, const char* what) const;
    [[noreturn]] static void domain_error(const char* op, double value);

    std::vector<Node> nodes_;
    std::size_t count_ = 0;
    std::vector<double> aux_;
    // Backward scratch: adj_ stays all-zero between calls (the sweep consumes
    // and re-zeroes entries as it walks down the tape).
    std::vector<double> adj_;
    std::vector<std::uint32_t> adj_var_;
    std::vector<std::uint8_t> active_;
};

// Operator sugar. Mixing Vars from different tapes is undefined (checked by
// assert in debug builds).
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
inline Var operator+(Var a, double k) { return a.tape->add_const(a, k); }
inline Var operator+(double k, Var a) { return a.tape->add_const(a, k); }
inline Var operator-(Var a, double k) { return a.tape->add_const(a, -k); }
inline Var operator-(double k, Var a) { return a.tape->add_const(a.tape->neg(a), k); }
inline Var operator*(Var a, double k) { return a.tape->mul_const(a, k); }
inline Var operator*(double k, Var a) { return a.tape->mul_const(a, k); }

inline Var exp(Var a) { return a.tape->exp(a); }
inline Var ln(Var a) { return a.tape->ln(a); }
inline Var sqrt(Var a) { return a.tape->sqrt(a); }
inline Var square(Var a) { return a.tape->square(a); }
inline Var abs(Var a) { return a.tape->abs(a); }
inline Var max(Var a, Var b) { return a.tape->max(a, b); }
inline Var sigmoid(Var a) { return a.tape->sigmoid(a); }
inline Var logit(Var a) { return a.tape->logit(a); }
inline Var tanh(Var a) { return a.tape->tanh(a); }
inline Var leaky_relu(Var a, double slope) { return a.tape->leaky_relu(a, slope); }
inline Var clamp_prob(Var a) { return a.tape->clamp_prob(a); }
inline Var fma(Var a, Var b, Var c) { return a.tape->fma(a, b, c); }

}  // namespace logan
