#include <cmath>

#include "doctest.h"
#include "kforge/history.hpp"
#include "kforge/sysdsl.hpp"

using namespace kforge;
using namespace kforge::sysdsl;

TEST_CASE("parser builds the expected structure") {
    auto e = parse("x1(0) + d1*norm_r(x2)");
    REQUIRE(e->kind == NodeKind::Binary);
    CHECK(e->bin == BinOp::Add);
    CHECK(e->a->kind == NodeKind::StateNow);
    CHECK(e->a->index == 1);
    REQUIRE(e->b->kind == NodeKind::Binary);
    CHECK(e->b->bin == BinOp::Mul);
    CHECK(e->b->a->kind == NodeKind::VarD);
    CHECK(e->b->b->kind == NodeKind::NormR);
    CHECK(e->b->b->index == 2);
}

TEST_CASE("window-integral drift term parses") {
    auto e = parse("d1 * integral(sq(x1), r)");
    REQUIRE(e->kind == NodeKind::Binary);
    CHECK(e->b->kind == NodeKind::Integral);
    CHECK(e->b->index == 1);
    CHECK(e->b->tau_is_r);
}

TEST_CASE("errors carry positions and expectations") {
    CHECK_THROWS_WITH_AS(parse("x1("), doctest::Contains("column 4"), ParseError);
    CHECK_THROWS_AS(parse("foo + 1"), ParseError);
    CHECK_THROWS_AS(parse("sin(1,2)"), ParseError);
    CHECK_THROWS_AS(parse("x1 + 1"), ParseError);  // bare state outside integral
    CHECK_THROWS_AS(parse("1 +"), ParseError);
}

TEST_CASE("evaluation against a history environment") {
    HistorySegment x = HistorySegment::sample(1.0, 2, 16, [](double, std::span<double> out) {
        out[0] = 2.0;
        out[1] = 3.0;
    });
    std::vector<double> d{-1.0};
    EvalEnv env{0.0, 0.0, d, &x, 1.0};

    CHECK(eval(*parse("x1(0) + d1*norm_r(x2)"), env) == doctest::Approx(-1.0).epsilon(1e-15));

    HistorySegment ones = HistorySegment::constant(1.0, std::vector<double>{1.0}, 32);
    EvalEnv env1{0.0, 0.0, {}, &ones, 1.0};
    CHECK(eval(*parse("integral(sq(x1), r)"), env1) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(eval(*parse("delay(x1, 0)"), env1) == ones.newest()[0]);
}

TEST_CASE("evaluation faults carry the sub-expression") {
    HistorySegment ones = HistorySegment::constant(1.0, std::vector<double>{1.0}, 8);
    EvalEnv env{0.0, 0.0, {}, &ones, 1.0};
    CHECK_THROWS_WITH_AS(eval(*parse("1/(x1(0) - 1)"), env), doctest::Contains("division by zero"),
                         EvalError);
    CHECK_THROWS_WITH_AS(eval(*parse("sqrt(0 - x1(0))"), env), doctest::Contains("sqrt"),
                         EvalError);
    CHECK_THROWS_AS(eval(*parse("d2 + x1(0)"), env), EvalError);  // unbound disturbance
}

TEST_CASE("precedence corpus") {
    EvalEnv env{};
    CHECK(eval(*parse("1+2*3"), env) == 7.0);
    CHECK(eval(*parse("-2^2"), env) == -4.0);     // pow binds tighter than unary minus
    CHECK(eval(*parse("2^3^2"), env) == 512.0);   // right associative
    CHECK(eval(*parse("2^-1"), env) == 0.5);
    CHECK(eval(*parse("6/3/2"), env) == 1.0);     // left associative
    CHECK(eval(*parse("1 - 2 - 3"), env) == -4.0);
}

TEST_CASE("print/parse round trip is structurally stable") {
    std::vector<std::string> corpus = {
        "x1(0) + d1*norm_r(x2)",
        "d1 * integral(sq(x1), r)",
        "sin(t) * exp(0 - t) + u",
        "delay(x1, 0.25) - sqrt(abs(x2(0)))",
        "1 + 2*3 - 4/5",
        "-2^2",
        "cos(x1(0))^2 + sin(x1(0))^2",
        "integral(sq(x1) + 1, 0.5)",
        "u*u - d2/(1 + sq(x1(0)))",
        "norm_r(x1)*norm_r(x2)",
    };
    // programmatic extension to a 200-expression corpus
    for (int i = 0; i < 190; ++i) {
        std::string atom1 = i % 3 == 0 ? "x1(0)" : (i % 3 == 1 ? "delay(x2, 0.5)" : "norm_r(x1)");
        std::string atom2 = i % 2 == 0 ? std::to_string(i) + ".5" : "t";
        std::string op = i % 4 == 0 ? "+" : (i % 4 == 1 ? "*" : (i % 4 == 2 ? "-" : "/"));
        corpus.push_back("(" + atom1 + " " + op + " " + atom2 + ") + sq(" + atom1 + ")^" +
                         std::to_string(1 + i % 3));
    }
    REQUIRE(corpus.size() == 200);
    for (const auto& text : corpus) {
        auto first = parse(text);
        auto second = parse(print(*first));
        CHECK_MESSAGE(structurally_equal(*first, *second), "round trip changed: ", text);
    }
}

TEST_CASE("eval is pure") {
    HistorySegment x = HistorySegment::sample(1.0, 1, 16, [](double theta, std::span<double> out) {
        out[0] = std::cos(theta);
    });
    std::vector<double> d{0.3};
    EvalEnv env{1.5, -0.2, d, &x, 1.0};
    auto e = parse("sin(t)*x1(0) + d1*integral(sq(x1), r) + u");
    double first = eval(*e, env);
    for (int i = 0; i < 1000; ++i) CHECK(eval(*e, env) == first);
}

TEST_CASE("bind_rhs validates and spot-checks the equilibrium") {
    auto ok = bind_rhs({"d1*integral(sq(x1), r) + x2(0)", "d2*norm_r(x2) + u"}, 2, 2, 1.0);
    CHECK(!ok.zero_check_warned);

    auto warn = bind_rhs({"1"}, 1, 0, 1.0);
    CHECK(warn.zero_check_warned);

    CHECK_THROWS_AS(bind_rhs({"x3(0)", "u"}, 2, 0, 1.0), BindError);
    CHECK_THROWS_AS(bind_rhs({"x1(0)"}, 2, 0, 1.0), BindError);          // row count
    CHECK_THROWS_AS(bind_rhs({"delay(x1, 2.0)"}, 1, 0, 1.0), BindError); // tau beyond r
}

TEST_CASE("bound rhs evaluates like the hand expression") {
    auto rhs = bind_rhs({"d1*integral(sq(x1), r) + x2(0)", "d2*norm_r(x2) + u"}, 2, 2, 1.0);
    HistorySegment x = HistorySegment::sample(1.0, 2, 64, [](double theta, std::span<double> out) {
        out[0] = 1.0 + theta;
        out[1] = -2.0 * theta;
    });
    std::vector<double> d{0.5, -0.25};
    std::vector<double> out(2);
    rhs(0.0, d, x, 3.0, out);
    double integral = window_integral(x, 0, [](double v) { return v * v; });
    CHECK(out[0] == doctest::Approx(0.5 * integral + x.newest()[1]).epsilon(1e-14));
    CHECK(out[1] == doctest::Approx(-0.25 * 2.0 + 3.0).epsilon(1e-14));
}

TEST_CASE("scalar mode evaluates with jets") {
    std::vector<std::string> fv{"s"};
    auto e = parse("2 + 3*sq(s)", fv);
    D1 y = eval_scalar(*e, D1(2.0, 1.0));
    CHECK(y.v == doctest::Approx(14.0));
    CHECK(y.d == doctest::Approx(12.0));
}
