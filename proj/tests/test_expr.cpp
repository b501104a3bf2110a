#include <catch_amalgamated.hpp>

#include <cmath>
#include <future>
#include <numbers>

#include "contactlab/forms.hpp"
#include "support.hpp"

using namespace contactlab;
using expr::Expr;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const double pi = std::numbers::pi;

Expr X() { return expr::var("x"); }
Expr Y() { return expr::var("y"); }
Expr Z() { return expr::var("z"); }

Form alpha_leg() { return Form::from(charts::solid_torus(), {{{"x"}, expr::cos(Z())}, {{"y"}, expr::sin(Z())}}); }

// Max |a - b| over random points of the chart, coefficient by coefficient.
double max_difference(const Form& a, const Form& b, std::size_t n = 200, std::uint64_t seed = 5) {
  const auto diff = a - b;
  const CompiledForm cf(diff);
  double worst = 0.0;
  for (const auto& p : random_points(*a.chart(), n, seed))
    for (double c : cf.eval(p)) worst = std::max(worst, std::abs(c));
  return worst;
}

double at(const Expr& e, const ChartPtr& chart, std::initializer_list<double> p) { return expr::eval(e, *chart, p); }

}  // namespace

TEST_CASE("chart invariants", "[exprcore]") {
  CHECK_THROWS_AS(Chart("bad", {Coordinate::interval("x", 0, 1), Coordinate::interval("x", 0, 1)}), std::invalid_argument);
  CHECK_THROWS_AS(Chart("bad", {Coordinate::circle("z", -1.0)}), std::invalid_argument);
  CHECK_THROWS_AS(Chart("bad", {Coordinate::interval("x", 1, 0)}), std::invalid_argument);
  const auto st = charts::solid_torus();
  CHECK(st->names() == std::vector<std::string>{"x", "y", "z"});
  CHECK(st->coord(2).periodic);
  CHECK(st->domain_violation(std::vector<double>{0.9, 0.9, 0.0}).has_value());
  CHECK_FALSE(st->domain_violation(std::vector<double>{0.6, 0.6, 0.0}).has_value());
}

TEST_CASE("diff examples", "[exprcore]") {
  const auto st = charts::solid_torus();
  const auto cyl = charts::annulus();
  const Expr r = expr::var("r");

  SECTION("d/dz sin z = cos z") {
    const Expr d = expr::diff(expr::sin(Z()), "z");
    CHECK(expr::same(d, expr::cos(Z())));
  }
  SECTION("bump derivative vanishes at its peak") {
    const Expr d = expr::diff(expr::bump(r, 7.0 / 12, 1.0 / 12), "r");
    CHECK(at(d, cyl, {7.0 / 12, 0.0}) == 0.0);
  }
  SECTION("psi'(1) = 1/e") {
    // Hand oracle: psi'(u) = psi(u) / u^2, so psi'(1) = exp(-1).
    const Expr d = expr::diff(expr::psi(r), "r");
    CHECK_THAT(at(d, cyl, {1.0, 0.0}), WithinRel(std::exp(-1.0), 1e-15));
    for (double u : {0.1, 0.3, 0.7}) CHECK_THAT(at(d, cyl, {u, 0.0}), WithinRel(std::exp(-1.0 / u) / (u * u), 1e-14));
  }
  SECTION("unknown coordinate") {
    try {
      (void)expr::diff(expr::sin(Z()), *st, "t");
      FAIL("expected an error");
    } catch (const expr::EvalError& e) {
      CHECK(e.kind() == expr::EvalError::Kind::unknown_coordinate);
    }
  }
}

TEST_CASE("eval examples", "[exprcore]") {
  const auto st = charts::solid_torus();
  const auto cyl = charts::annulus();
  const Expr r = expr::var("r");
  CHECK(at(expr::cos(Z()), st, {0, 0, 0}) == 1.0);
  CHECK(at(expr::bump(r, 7.0 / 12, 1.0 / 12), cyl, {7.0 / 12, 0}) == 1.0);
  CHECK(at(expr::smoothstep(r), cyl, {0.5, 0}) == 0.5);
  // sigma(u) + sigma(1 - u) = 1
  for (double u : {0.1, 0.25, 0.4, 0.77})
    CHECK_THAT(at(expr::smoothstep(r) + expr::smoothstep(1.0 - r), cyl, {u, 0}), WithinAbs(1.0, 1e-15));
}

TEST_CASE("evaluation errors", "[exprcore]") {
  const auto st = charts::solid_torus();
  SECTION("point outside the disc") {
    CHECK_THROWS_AS(at(X(), st, {0.9, 0.9, 0.0}), expr::EvalError);
  }
  SECTION("unbound parameter") {
    CHECK_THROWS_AS(at(X() * expr::param("c"), st, {0.1, 0.1, 0.0}), expr::EvalError);
    CHECK(expr::eval(X() * expr::param("c"), *st, {0.5, 0.1, 0.0}, {{"c", 4.0}}) == 2.0);
  }
  SECTION("division by zero") {
    try {
      (void)at(X() / Y(), st, {0.5, 0.0, 0.0});
      FAIL("expected an error");
    } catch (const expr::EvalError& e) {
      CHECK(e.kind() == expr::EvalError::Kind::division_by_zero);
    }
    CHECK(at(Y() / Y(), st, {0.5, 0.0, 0.0}) == 0.0);  // zero numerator
  }
}

TEST_CASE("flat primitives vanish exactly outside their supports", "[exprcore]") {
  const auto cyl = charts::annulus();
  const Expr r = expr::var("r");
  const Expr b = expr::bump(r, 0.5, 0.125);
  std::vector<Expr> fs{expr::psi(r - 0.3), expr::smoothstep(4.0 * (r - 0.5)), b};
  for (const auto& f : fs) {
    Expr d1 = expr::diff(f, "r");
    Expr d2 = expr::diff(d1, "r");
    for (double u = 0.0; u <= 1.0; u += 1.0 / 64) {
      for (const auto& g : {f, d1, d2}) CHECK(std::isfinite(at(g, cyl, {u, 0})));
    }
  }
  for (double u : {0.0, 0.2, 0.375, 0.625, 0.9, 1.0}) CHECK(at(b, cyl, {u, 0}) == 0.0);
  for (double u : {0.375, 0.625}) {
    CHECK(at(expr::diff(b, "r"), cyl, {u, 0}) == 0.0);
    CHECK(at(expr::diff(expr::diff(b, "r"), "r"), cyl, {u, 0}) == 0.0);
  }
  CHECK(at(b, cyl, {0.3751, 0}) > 0.0);
  CHECK(at(expr::psi(r - 0.3), cyl, {0.3, 0}) == 0.0);
  CHECK(at(expr::diff(expr::psi(r - 0.3), "r"), cyl, {0.3, 0}) == 0.0);
  CHECK(at(expr::smoothstep(r), cyl, {0.0, 0}) == 0.0);
  CHECK(at(expr::smoothstep(r), cyl, {1.0, 0}) == 1.0);
}

TEST_CASE("periodic reduction", "[exprcore]") {
  const auto ml = charts::m_leg();
  Rng rng(11);
  for (int k = 0; k < 20; ++k) {
    const Expr e = testkit::random_coefficient(ml, rng);
    for (const auto& p : random_points(*ml, 50, 100 + k)) {
      auto q = p;
      q[2] += 2 * pi;
      q[3] -= 2 * pi;
      const double a = expr::eval(e, *ml, p);
      CHECK_THAT(expr::eval(e, *ml, q), WithinAbs(a, 1e-12 * (1 + std::abs(a))));
    }
  }
}

TEST_CASE("exterior derivative examples", "[exprcore]") {
  const auto ml = charts::m_leg();
  CHECK(exterior_d(Form::d_coordinate(ml, "t")).structurally_zero());

  // d(cos z dx + sin z dy) = -sin z dz^dx + cos z dz^dy = sin z dx^dz - cos z dy^dz
  const Form da = exterior_d(alpha_leg());
  const auto st = charts::solid_torus();
  const Form expected = Form::from(st, {{{"z", "x"}, -expr::sin(Z())}, {{"z", "y"}, expr::cos(Z())}});
  CHECK(max_difference(da, expected) == 0.0);
  CHECK(da.coeff({"x", "y"}).is_zero());
}

TEST_CASE("wedge examples", "[exprcore]") {
  const auto st = charts::solid_torus();
  const Form dx = Form::d_coordinate(st, "x");
  const Form dy = Form::d_coordinate(st, "y");
  CHECK(max_difference(wedge(dx, dy), -wedge(dy, dx)) == 0.0);
  CHECK(wedge(dx, dy).coeff({"y", "x"}).value() == -1.0);

  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const Form w = testkit::random_form(st, 1, rng);
    CHECK(wedge(w, w).structurally_zero());
  }

  // alpha ^ d alpha = -dx^dy^dz
  const Form top = wedge(alpha_leg(), exterior_d(alpha_leg()));
  CHECK(max_difference(top, Form::from(st, {{{"x", "y", "z"}, Expr(-1.0)}}), 1000) < 1e-15);
}

TEST_CASE("interior product examples", "[exprcore]") {
  const auto st = charts::solid_torus();
  const auto cyl = charts::annulus();
  const auto ml = charts::m_leg();
  const Form iz = interior(VectorField::coordinate(st, "z"), Form::d_coordinate(st, "z"));
  CHECK(iz.degree() == 0);
  CHECK(iz.coeff(0).value() == 1.0);

  const Form drdt = wedge(Form::d_coordinate(cyl, "r"), Form::d_coordinate(cyl, "t"));
  const Form ir = interior(VectorField::coordinate(cyl, "r"), drdt);
  CHECK(max_difference(ir, Form::d_coordinate(cyl, "t")) == 0.0);

  const Form a4 = Form::from(ml, {{{"x"}, expr::cos(Z())}, {{"y"}, expr::sin(Z())}});
  CHECK(interior(VectorField::coordinate(ml, "t"), a4).structurally_zero());
}

TEST_CASE("Lie derivative examples", "[exprcore]") {
  const auto st = charts::solid_torus();
  const auto ml = charts::m_leg();
  // L_{d/dz}(cos z dx + sin z dy) = -sin z dx + cos z dy
  const Form l = lie_derivative(VectorField::coordinate(st, "z"), alpha_leg());
  const Form expected = Form::from(st, {{{"x"}, -expr::sin(Z())}, {{"y"}, expr::cos(Z())}});
  CHECK(max_difference(l, expected) == 0.0);

  // L_{d/dt} beta = 0 for t-independent beta
  Rng rng(17);
  for (int k = 0; k < 10; ++k) {
    Form beta(ml, 1 + k % 2);
    for (Mask m : basis_masks(4, beta.degree())) beta.add_term(m, testkit::random_coefficient(st, rng));
    const Form lt = lie_derivative(VectorField::coordinate(ml, "t"), beta);
    CHECK(test_zero(lt, 500, 1e-12, 40 + k).zero);
  }
}

TEST_CASE("Lie bracket examples", "[exprcore]") {
  const auto cyl = charts::annulus();
  const auto dsk = charts::disc();
  const auto b = lie_bracket(VectorField::coordinate(cyl, "r"), VectorField::coordinate(cyl, "t"));
  CHECK(b[0].is_zero());
  CHECK(b[1].is_zero());

  const VectorField rot(dsk, {-expr::var("y"), expr::var("x")});
  const auto c = lie_bracket(rot, VectorField::coordinate(dsk, "x"));
  CHECK(c[0].is_zero());
  CHECK(c[1].is_constant());
  CHECK(c[1].value() == -1.0);

  Rng rng(23);
  for (int k = 0; k < 10; ++k) {
    const auto v = testkit::random_field(charts::m_leg(), rng);
    const auto vv = lie_bracket(v, v);
    for (std::size_t i = 0; i < 4; ++i) CHECK(test_zero(vv[i], charts::m_leg(), 200, 1e-12, k).zero);
  }
}

TEST_CASE("pullback examples", "[exprcore]") {
  const auto st = charts::solid_torus();
  const auto pol = charts::solid_torus_polar();
  const auto ml = charts::m_leg();
  const auto cyl = charts::annulus();

  SECTION("identity") {
    const CoordinateMap id(st, st, {X(), Y(), Z()});
    Rng rng(29);
    for (int k = 0; k < 10; ++k) {
      const Form w = testkit::random_form(st, 1 + k % 3, rng);
      CHECK(max_difference(pullback(id, w), w) == 0.0);
    }
  }
  SECTION("dx in polar coordinates") {
    const Expr r = expr::var("r");
    const Expr th = expr::var("theta");
    const CoordinateMap polar(pol, st, {r * expr::cos(th), r * expr::sin(th), expr::var("z")});
    const Form got = pullback(polar, Form::d_coordinate(st, "x"));
    const Form want = Form::from(pol, {{{"r"}, expr::cos(th)}, {{"theta"}, -r * expr::sin(th)}});
    CHECK(max_difference(got, want) == 0.0);
  }
  SECTION("dt under the projection to the annulus") {
    const CoordinateMap proj(ml, cyl, {expr::sqrt(X() * X() + Y() * Y()), expr::var("t")});
    const Form got = pullback(proj, Form::d_coordinate(cyl, "t"));
    CHECK(max_difference(got, Form::d_coordinate(ml, "t")) == 0.0);
  }
  SECTION("image outside the target is rejected") {
    const CoordinateMap blow(st, st, {2.0 * X(), 2.0 * Y(), Z()});
    CHECK_THROWS_AS(pullback_checked(blow, alpha_leg()), DomainError);
  }
}

TEST_CASE("calculus laws on random forms", "[exprcore][property]") {
  // 50 random forms, 10^3 random points each.
  const auto res = testkit::calculus_laws(50, 1000, 20240601);
  INFO("dd " << res.dd << " cartan " << res.cartan << " leibniz " << res.leibniz);
  CHECK(res.forms == 50);
  CHECK(res.dd < 1e-12);
  CHECK(res.cartan < 1e-10);
  CHECK(res.leibniz < 1e-10);
}

TEST_CASE("programs are safe to share between threads", "[exprcore]") {
  Rng rng(31);
  const auto ml = charts::m_leg();
  const Expr e = testkit::random_coefficient(ml, rng) * testkit::random_coefficient(ml, rng);
  const expr::Program prog(e, ml->names());
  const auto pts = random_points(*ml, 2000, 9);
  auto sweep = [&] {
    std::vector<double> out;
    for (const auto& p : pts) out.push_back(prog(p));
    return out;
  };
  auto a = std::async(std::launch::async, sweep);
  auto b = std::async(std::launch::async, sweep);
  CHECK(a.get() == b.get());
}
