#pragma once

// Expression language for user-declared right-hand sides. Covers numeric
// literals, t / u / d_k, state accessors x_i(0), delay(x_i, tau), norm_r(x_i),
// window integrals, the usual unary functions and arithmetic.
//
// Grammar (EBNF), also shipped in the README:
//
//   expr     := term { ("+" | "-") term }
//   term     := unary { ("*" | "/") unary }
//   unary    := "-" unary | power
//   power    := primary [ "^" unary ]          (right associative)
//   primary  := number | ident | call | "(" expr ")"
//   call     := func "(" expr { "," expr } ")"
//
// "^" binds tighter than unary minus: -2^2 == -(2^2) == -4.

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kforge/dual.hpp"

namespace kforge {
struct HistorySegment;
}

namespace kforge::sysdsl {

enum class NodeKind {
    Number,
    VarT,
    VarU,
    VarD,        // d_k, index
    VarFree,     // free scalar variable (single-variable mode), name stored
    StateNow,    // x_i(0)
    Delay,       // delay(x_i, tau)
    NormR,       // norm_r(x_i)
    Integral,    // integral(f(x_i), window)
    StateBare,   // x_i used bare -- only legal inside integral/norm_r
    Unary,       // op in {neg, sin, cos, exp, abs, sqrt, sq}
    Binary,      // op in {+, -, *, /, ^}
};

enum class UnOp { Neg, Sin, Cos, Exp, Abs, Sqrt, Sq };
enum class BinOp { Add, Sub, Mul, Div, Pow };

struct Expr {
    NodeKind kind{};
    double number = 0.0;
    int index = 0;       // state/disturbance index (1-based)
    double tau = 0.0;    // delay offset or integral window ("r" resolves at bind)
    bool tau_is_r = false;
    std::string name;    // free-variable name
    UnOp un{};
    BinOp bin{};
    std::shared_ptr<const Expr> a, b;
};

using ExprPtr = std::shared_ptr<const Expr>;

struct ParseError : std::runtime_error {
    int column;  // 1-based
    ParseError(const std::string& msg, int col)
        : std::runtime_error(msg + " (column " + std::to_string(col) + ")"), column(col) {}
};

// Parses an rhs expression. `free_vars` lists identifiers allowed as plain
// scalars (e.g. {"s"} for override expressions); empty for system mode.
ExprPtr parse(const std::string& text, std::span<const std::string> free_vars = {});

std::string print(const Expr& e);

bool structurally_equal(const Expr& a, const Expr& b);

// ---- evaluation against a history environment ----------------------------

struct EvalEnv {
    double t = 0.0;
    double u = 0.0;
    std::span<const double> d;
    const HistorySegment* history = nullptr;  // n-dimensional segment
    double r = 0.0;
};

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double eval(const Expr& e, const EvalEnv& env);

// ---- single-variable evaluation (for overrides, phi/L closed forms) -------

// Evaluates an expression whose only identifier is one free variable.
// Usable with jets for forward-mode derivatives.
template <class T>
T eval_scalar(const Expr& e, const T& x) {
    switch (e.kind) {
        case NodeKind::Number: return T(e.number);
        case NodeKind::VarFree: return x;
        case NodeKind::Unary: {
            T a = eval_scalar(*e.a, x);
            switch (e.un) {
                case UnOp::Neg: return -a;
                case UnOp::Sin: return sin(a);
                case UnOp::Cos: return cos(a);
                case UnOp::Exp: return exp(a);
                case UnOp::Abs: return abs(a);
                case UnOp::Sqrt:
                    if (value_of(a) < 0.0) throw EvalError("sqrt of negative value");
                    return sqrt(a);
                case UnOp::Sq: return a * a;
            }
            break;
        }
        case NodeKind::Binary: {
            T a = eval_scalar(*e.a, x);
            T b = eval_scalar(*e.b, x);
            switch (e.bin) {
                case BinOp::Add: return a + b;
                case BinOp::Sub: return a - b;
                case BinOp::Mul: return a * b;
                case BinOp::Div:
                    if (value_of(b) == 0.0) throw EvalError("division by zero");
                    return a / b;
                case BinOp::Pow:
                    if (value_of(a) <= 0.0 && value_of(b) != std::floor(value_of(b)))
                        throw EvalError("pow of non-positive base with fractional exponent");
                    return pow_real(a, value_of(b));
            }
            break;
        }
        default:
            throw EvalError("expression uses history accessors; not a scalar function");
    }
    throw EvalError("malformed expression node");
}

// ---- binding to a system rhs ----------------------------------------------

struct BindError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BoundRhs {
    int dim = 0;
    int n_dist = 0;
    double r = 0.0;
    std::vector<ExprPtr> components;
    bool zero_check_warned = false;

    void operator()(double t, std::span<const double> d, const HistorySegment& x, double u,
                    std::span<double> out) const;
};

// Validates indices/arities against (n, l, r) and spot-checks f(t,d,0,0)=0;
// a failed zero check sets zero_check_warned rather than throwing.
BoundRhs bind_rhs(const std::vector<std::string>& exprs, int n, int n_dist, double r);

}  // namespace kforge::sysdsl
