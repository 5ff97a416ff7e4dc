#include "kforge/sysdsl.hpp"

#include <cctype>
#include <charconv>
#include <optional>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "kforge/history.hpp"

namespace kforge::sysdsl {

namespace {

enum class Tok { Number, Ident, LParen, RParen, Comma, Plus, Minus, Star, Slash, Caret, End };

struct Token {
    Tok kind;
    double num = 0.0;
    std::string text;
    int col = 0;  // 1-based
};

class Lexer {
  public:
    explicit Lexer(const std::string& s) : s_(s) {}

    Token next() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        int col = static_cast<int>(pos_) + 1;
        if (pos_ >= s_.size()) return {Tok::End, 0, "", col};
        char c = s_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            size_t start = pos_;
            while (pos_ < s_.size() &&
                   (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
                    s_[pos_] == 'e' || s_[pos_] == 'E' ||
                    ((s_[pos_] == '+' || s_[pos_] == '-') && pos_ > start &&
                     (s_[pos_ - 1] == 'e' || s_[pos_ - 1] == 'E'))))
                ++pos_;
            std::string text = s_.substr(start, pos_ - start);
            try {
                double v = std::stod(text);
                return {Tok::Number, v, text, col};
            } catch (...) {
                throw ParseError("malformed number '" + text + "'", col);
            }
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                        s_[pos_] == '_'))
                ++pos_;
            return {Tok::Ident, 0, s_.substr(start, pos_ - start), col};
        }
        ++pos_;
        switch (c) {
            case '(': return {Tok::LParen, 0, "(", col};
            case ')': return {Tok::RParen, 0, ")", col};
            case ',': return {Tok::Comma, 0, ",", col};
            case '+': return {Tok::Plus, 0, "+", col};
            case '-': return {Tok::Minus, 0, "-", col};
            case '*': return {Tok::Star, 0, "*", col};
            case '/': return {Tok::Slash, 0, "/", col};
            case '^': return {Tok::Caret, 0, "^", col};
            default: throw ParseError(std::string("unexpected character '") + c + "'", col);
        }
    }

  private:
    const std::string& s_;
    size_t pos_ = 0;
};

ExprPtr make(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

// Parses "x<k>" / "d<k>"; returns 0 if the suffix is not a plain index.
int indexed(const std::string& name, char prefix) {
    if (name.size() < 2 || name[0] != prefix) return 0;
    int idx = 0;
    for (size_t i = 1; i < name.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(name[i]))) return 0;
        idx = idx * 10 + (name[i] - '0');
    }
    return idx;
}

class Parser {
  public:
    Parser(const std::string& text, std::span<const std::string> free_vars)
        : lex_(text), free_vars_(free_vars) {
        advance();
    }

    ExprPtr parse_all() {
        ExprPtr e = expr();
        if (cur_.kind != Tok::End)
            throw ParseError("unexpected token '" + cur_.text + "', expected end of input or operator",
                             cur_.col);
        return e;
    }

  private:
    Lexer lex_;
    Token cur_;
    std::span<const std::string> free_vars_;
    bool in_integrand_ = false;

    void advance() { cur_ = lex_.next(); }

    void expect(Tok k, const char* what) {
        if (cur_.kind != k)
            throw ParseError(std::string("expected ") + what + ", got '" +
                                 (cur_.kind == Tok::End ? "end of input" : cur_.text) + "'",
                             cur_.col);
        advance();
    }

    ExprPtr expr() {
        ExprPtr lhs = term();
        while (cur_.kind == Tok::Plus || cur_.kind == Tok::Minus) {
            BinOp op = cur_.kind == Tok::Plus ? BinOp::Add : BinOp::Sub;
            advance();
            ExprPtr rhs = term();
            Expr e;
            e.kind = NodeKind::Binary;
            e.bin = op;
            e.a = lhs;
            e.b = rhs;
            lhs = make(std::move(e));
        }
        return lhs;
    }

    ExprPtr term() {
        ExprPtr lhs = unary();
        while (cur_.kind == Tok::Star || cur_.kind == Tok::Slash) {
            BinOp op = cur_.kind == Tok::Star ? BinOp::Mul : BinOp::Div;
            advance();
            ExprPtr rhs = unary();
            Expr e;
            e.kind = NodeKind::Binary;
            e.bin = op;
            e.a = lhs;
            e.b = rhs;
            lhs = make(std::move(e));
        }
        return lhs;
    }

    // "^" binds tighter than unary minus.
    ExprPtr unary() {
        if (cur_.kind == Tok::Minus) {
            int col = cur_.col;
            advance();
            ExprPtr a = unary();
            Expr e;
            e.kind = NodeKind::Unary;
            e.un = UnOp::Neg;
            e.a = a;
            (void)col;
            return make(std::move(e));
        }
        return power();
    }

    ExprPtr power() {
        ExprPtr base = primary();
        if (cur_.kind == Tok::Caret) {
            advance();
            ExprPtr exp = unary();  // right associative, exponent may be signed
            Expr e;
            e.kind = NodeKind::Binary;
            e.bin = BinOp::Pow;
            e.a = base;
            e.b = exp;
            return make(std::move(e));
        }
        return base;
    }

    bool is_free_var(const std::string& name) const {
        for (const auto& v : free_vars_)
            if (v == name) return true;
        return false;
    }

    ExprPtr primary() {
        if (cur_.kind == Tok::Number) {
            Expr e;
            e.kind = NodeKind::Number;
            e.number = cur_.num;
            advance();
            return make(std::move(e));
        }
        if (cur_.kind == Tok::LParen) {
            advance();
            ExprPtr inner = expr();
            expect(Tok::RParen, "')'");
            return inner;
        }
        if (cur_.kind != Tok::Ident)
            throw ParseError("expected expression, got '" +
                                 (cur_.kind == Tok::End ? "end of input" : cur_.text) + "'",
                             cur_.col);

        std::string name = cur_.text;
        int col = cur_.col;
        advance();

        if (cur_.kind == Tok::LParen) return call(name, col);

        if (name == "t") {
            Expr e;
            e.kind = NodeKind::VarT;
            return make(std::move(e));
        }
        if (name == "u") {
            Expr e;
            e.kind = NodeKind::VarU;
            return make(std::move(e));
        }
        if (int di = indexed(name, 'd'); di > 0) {
            Expr e;
            e.kind = NodeKind::VarD;
            e.index = di;
            return make(std::move(e));
        }
        if (int xi = indexed(name, 'x'); xi > 0) {
            if (!in_integrand_)
                throw ParseError("bare state '" + name +
                                     "' is only valid inside integral(...); use " + name + "(0)",
                                 col);
            Expr e;
            e.kind = NodeKind::StateBare;
            e.index = xi;
            return make(std::move(e));
        }
        if (is_free_var(name)) {
            Expr e;
            e.kind = NodeKind::VarFree;
            e.name = name;
            return make(std::move(e));
        }
        throw ParseError("unknown identifier '" + name + "'", col);
    }

    // Second argument of delay/integral: a number or the window symbol r.
    std::pair<double, bool> window_arg() {
        if (cur_.kind == Tok::Ident && cur_.text == "r") {
            advance();
            return {0.0, true};
        }
        bool neg = false;
        if (cur_.kind == Tok::Minus) {
            neg = true;
            advance();
        }
        if (cur_.kind != Tok::Number)
            throw ParseError("expected a numeric delay/window or 'r', got '" + cur_.text + "'",
                             cur_.col);
        double v = neg ? -cur_.num : cur_.num;
        advance();
        return {v, false};
    }

    ExprPtr call(const std::string& name, int col) {
        expect(Tok::LParen, "'('");

        if (int xi = indexed(name, 'x'); xi > 0) {
            // state accessor x_i(0)
            if (cur_.kind != Tok::Number || cur_.num != 0.0)
                throw ParseError("state accessor takes literal 0; use delay(" + name +
                                     ", tau) for lagged values",
                                 cur_.col);
            advance();
            expect(Tok::RParen, "')'");
            Expr e;
            e.kind = NodeKind::StateNow;
            e.index = xi;
            return make(std::move(e));
        }

        auto un_of = [&](const std::string& n) -> std::optional<UnOp> {
            if (n == "sin") return UnOp::Sin;
            if (n == "cos") return UnOp::Cos;
            if (n == "exp") return UnOp::Exp;
            if (n == "abs") return UnOp::Abs;
            if (n == "sqrt") return UnOp::Sqrt;
            if (n == "sq") return UnOp::Sq;
            return std::nullopt;
        };

        if (auto u = un_of(name)) {
            ExprPtr a = expr();
            expect(Tok::RParen, "')'");
            Expr e;
            e.kind = NodeKind::Unary;
            e.un = *u;
            e.a = a;
            return make(std::move(e));
        }

        if (name == "delay") {
            if (cur_.kind != Tok::Ident || indexed(cur_.text, 'x') == 0)
                throw ParseError("delay() takes a state x<i> as first argument", cur_.col);
            int xi = indexed(cur_.text, 'x');
            advance();
            expect(Tok::Comma, "','");
            auto [tau, is_r] = window_arg();
            expect(Tok::RParen, "')'");
            Expr e;
            e.kind = NodeKind::Delay;
            e.index = xi;
            e.tau = tau;
            e.tau_is_r = is_r;
            return make(std::move(e));
        }

        if (name == "norm_r") {
            if (cur_.kind != Tok::Ident || indexed(cur_.text, 'x') == 0)
                throw ParseError("norm_r() takes a state x<i>", cur_.col);
            int xi = indexed(cur_.text, 'x');
            advance();
            expect(Tok::RParen, "')'");
            Expr e;
            e.kind = NodeKind::NormR;
            e.index = xi;
            return make(std::move(e));
        }

        if (name == "integral") {
            bool saved = in_integrand_;
            in_integrand_ = true;
            ExprPtr integrand = expr();
            in_integrand_ = saved;
            expect(Tok::Comma, "','");
            auto [w, is_r] = window_arg();
            expect(Tok::RParen, "')'");
            // the integrand must reference exactly one state component
            int comp = 0;
            bool multiple = false;
            std::function<void(const Expr&)> scan = [&](const Expr& e) {
                if (e.kind == NodeKind::StateBare) {
                    if (comp == 0) comp = e.index;
                    else if (comp != e.index) multiple = true;
                }
                if (e.a) scan(*e.a);
                if (e.b) scan(*e.b);
            };
            scan(*integrand);
            if (comp == 0)
                throw ParseError("integral() integrand references no state component", col);
            if (multiple)
                throw ParseError("integral() integrand must use a single state component", col);
            Expr e;
            e.kind = NodeKind::Integral;
            e.index = comp;
            e.tau = w;
            e.tau_is_r = is_r;
            e.a = integrand;
            return make(std::move(e));
        }

        throw ParseError("unknown function '" + name + "'", col);
    }
};

const char* un_name(UnOp u) {
    switch (u) {
        case UnOp::Neg: return "-";
        case UnOp::Sin: return "sin";
        case UnOp::Cos: return "cos";
        case UnOp::Exp: return "exp";
        case UnOp::Abs: return "abs";
        case UnOp::Sqrt: return "sqrt";
        case UnOp::Sq: return "sq";
    }
    return "?";
}

std::string fmt_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

ExprPtr parse(const std::string& text, std::span<const std::string> free_vars) {
    Parser p(text, free_vars);
    return p.parse_all();
}

std::string print(const Expr& e) {
    switch (e.kind) {
        case NodeKind::Number: return fmt_num(e.number);
        case NodeKind::VarT: return "t";
        case NodeKind::VarU: return "u";
        case NodeKind::VarD: return "d" + std::to_string(e.index);
        case NodeKind::VarFree: return e.name;
        case NodeKind::StateNow: return "x" + std::to_string(e.index) + "(0)";
        case NodeKind::StateBare: return "x" + std::to_string(e.index);
        case NodeKind::Delay:
            return "delay(x" + std::to_string(e.index) + ", " +
                   (e.tau_is_r ? std::string("r") : fmt_num(e.tau)) + ")";
        case NodeKind::NormR: return "norm_r(x" + std::to_string(e.index) + ")";
        case NodeKind::Integral:
            return "integral(" + print(*e.a) + ", " +
                   (e.tau_is_r ? std::string("r") : fmt_num(e.tau)) + ")";
        case NodeKind::Unary:
            if (e.un == UnOp::Neg) return "(-" + print(*e.a) + ")";
            return std::string(un_name(e.un)) + "(" + print(*e.a) + ")";
        case NodeKind::Binary: {
            const char* op = e.bin == BinOp::Add   ? " + "
                             : e.bin == BinOp::Sub ? " - "
                             : e.bin == BinOp::Mul ? "*"
                             : e.bin == BinOp::Div ? "/"
                                                   : "^";
            return "(" + print(*e.a) + op + print(*e.b) + ")";
        }
    }
    return "?";
}

bool structurally_equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case NodeKind::Number: return a.number == b.number;
        case NodeKind::VarT:
        case NodeKind::VarU: return true;
        case NodeKind::VarFree: return a.name == b.name;
        case NodeKind::VarD:
        case NodeKind::StateNow:
        case NodeKind::StateBare:
        case NodeKind::NormR: return a.index == b.index;
        case NodeKind::Delay:
            return a.index == b.index && a.tau == b.tau && a.tau_is_r == b.tau_is_r;
        case NodeKind::Integral:
            return a.index == b.index && a.tau == b.tau && a.tau_is_r == b.tau_is_r &&
                   structurally_equal(*a.a, *b.a);
        case NodeKind::Unary: return a.un == b.un && structurally_equal(*a.a, *b.a);
        case NodeKind::Binary:
            return a.bin == b.bin && structurally_equal(*a.a, *b.a) &&
                   structurally_equal(*a.b, *b.b);
    }
    return false;
}

namespace {

// Integrand evaluation: bare state substituted with the sample value.
double eval_integrand(const Expr& e, double xv) {
    switch (e.kind) {
        case NodeKind::Number: return e.number;
        case NodeKind::StateBare: return xv;
        case NodeKind::Unary: {
            double a = eval_integrand(*e.a, xv);
            switch (e.un) {
                case UnOp::Neg: return -a;
                case UnOp::Sin: return std::sin(a);
                case UnOp::Cos: return std::cos(a);
                case UnOp::Exp: return std::exp(a);
                case UnOp::Abs: return std::fabs(a);
                case UnOp::Sqrt:
                    if (a < 0) throw EvalError("sqrt of negative value in integrand");
                    return std::sqrt(a);
                case UnOp::Sq: return a * a;
            }
            break;
        }
        case NodeKind::Binary: {
            double a = eval_integrand(*e.a, xv);
            double b = eval_integrand(*e.b, xv);
            switch (e.bin) {
                case BinOp::Add: return a + b;
                case BinOp::Sub: return a - b;
                case BinOp::Mul: return a * b;
                case BinOp::Div:
                    if (b == 0.0) throw EvalError("division by zero in integrand");
                    return a / b;
                case BinOp::Pow: return std::pow(a, b);
            }
            break;
        }
        default: throw EvalError("integrand may only use the state component and constants");
    }
    throw EvalError("malformed integrand");
}

[[noreturn]] void fault(const Expr& e, const std::string& what) {
    throw EvalError(what + " in sub-expression: " + print(e));
}

}  // namespace

double eval(const Expr& e, const EvalEnv& env) {
    switch (e.kind) {
        case NodeKind::Number: return e.number;
        case NodeKind::VarT: return env.t;
        case NodeKind::VarU: return env.u;
        case NodeKind::VarD:
            if (e.index < 1 || size_t(e.index) > env.d.size()) fault(e, "unbound disturbance");
            return env.d[size_t(e.index - 1)];
        case NodeKind::VarFree: fault(e, "free variable has no binding in system mode");
        case NodeKind::StateNow:
            if (!env.history || e.index > env.history->dim) fault(e, "unbound state");
            return env.history->newest()[size_t(e.index - 1)];
        case NodeKind::Delay: {
            if (!env.history || e.index > env.history->dim) fault(e, "unbound state");
            double tau = e.tau_is_r ? env.r : e.tau;
            if (tau < 0 || tau > env.history->r + 1e-12) fault(e, "delay outside the window");
            return env.history->component_at(-std::min(tau, env.history->r), e.index - 1);
        }
        case NodeKind::NormR:
            if (!env.history || e.index > env.history->dim) fault(e, "unbound state");
            return sup_norm_component(*env.history, e.index - 1);
        case NodeKind::Integral: {
            if (!env.history || e.index > env.history->dim) fault(e, "unbound state");
            double w = e.tau_is_r ? env.r : e.tau;
            if (w < 0 || w > env.history->r + 1e-12) fault(e, "integral window outside history");
            const Expr& integrand = *e.a;
            return window_integral(*env.history, e.index - 1,
                                   [&](double xv) { return eval_integrand(integrand, xv); });
        }
        case NodeKind::StateBare: fault(e, "bare state outside integral");
        case NodeKind::Unary: {
            double a = eval(*e.a, env);
            switch (e.un) {
                case UnOp::Neg: return -a;
                case UnOp::Sin: return std::sin(a);
                case UnOp::Cos: return std::cos(a);
                case UnOp::Exp: return std::exp(a);
                case UnOp::Abs: return std::fabs(a);
                case UnOp::Sqrt:
                    if (a < 0) fault(e, "sqrt of negative value");
                    return std::sqrt(a);
                case UnOp::Sq: return a * a;
            }
            break;
        }
        case NodeKind::Binary: {
            double a = eval(*e.a, env);
            double b = eval(*e.b, env);
            switch (e.bin) {
                case BinOp::Add: return a + b;
                case BinOp::Sub: return a - b;
                case BinOp::Mul: return a * b;
                case BinOp::Div:
                    if (b == 0.0) fault(e, "division by zero");
                    return a / b;
                case BinOp::Pow: return std::pow(a, b);
            }
            break;
        }
    }
    fault(e, "malformed expression");
}

void BoundRhs::operator()(double t, std::span<const double> d, const HistorySegment& x, double u,
                          std::span<double> out) const {
    EvalEnv env{t, u, d, &x, r};
    for (int i = 0; i < dim; ++i) out[size_t(i)] = eval(*components[size_t(i)], env);
}

BoundRhs bind_rhs(const std::vector<std::string>& exprs, int n, int n_dist, double r) {
    if (int(exprs.size()) != n)
        throw BindError("rhs list has " + std::to_string(exprs.size()) + " rows for an n = " +
                        std::to_string(n) + " system");
    BoundRhs out;
    out.dim = n;
    out.n_dist = n_dist;
    out.r = r;
    for (const auto& text : exprs) {
        ExprPtr e = parse(text);
        std::function<void(const Expr&)> walk = [&](const Expr& node) {
            if ((node.kind == NodeKind::StateNow || node.kind == NodeKind::Delay ||
                 node.kind == NodeKind::NormR || node.kind == NodeKind::Integral ||
                 node.kind == NodeKind::StateBare) &&
                node.index > n)
                throw BindError("state index x" + std::to_string(node.index) +
                                " exceeds system order " + std::to_string(n));
            if (node.kind == NodeKind::VarD && node.index > n_dist)
                throw BindError("disturbance index d" + std::to_string(node.index) +
                                " exceeds declared dimension " + std::to_string(n_dist));
            if ((node.kind == NodeKind::Delay || node.kind == NodeKind::Integral) &&
                !node.tau_is_r && (node.tau < 0 || node.tau > r + 1e-12))
                throw BindError("delay offset " + std::to_string(node.tau) +
                                " outside [0, r] with r = " + std::to_string(r));
            if (node.a) walk(*node.a);
            if (node.b) walk(*node.b);
        };
        walk(*e);
        out.components.push_back(std::move(e));
    }

    // f(t, d, 0, 0) = 0 spot check
    HistorySegment zero = HistorySegment::constant(r, std::vector<double>(size_t(n), 0.0), 16);
    std::vector<double> d0(size_t(std::max(n_dist, 1)), 0.0);
    std::vector<double> val(size_t(n), 0.0);
    for (double t : {0.0, 0.7, 13.5}) {
        EvalEnv env{t, 0.0, std::span<const double>(d0.data(), size_t(n_dist)), &zero, r};
        for (int i = 0; i < n; ++i) {
            double v = eval(*out.components[size_t(i)], env);
            if (std::fabs(v) > 1e-12) out.zero_check_warned = true;
        }
    }
    (void)val;
    return out;
}

}  // namespace kforge::sysdsl
