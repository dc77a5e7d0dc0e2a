#include <doctest.h>

#include "fjs/fuzzy.hpp"
#include "support.hpp"

using namespace fjs;

TEST_CASE("membership") {
  const Tfn t{1, 2, 3};
  CHECK(membership(t, 2.0) == 1);
  CHECK(membership(t, 1.5) == 0.5);
  CHECK(membership(t, 4.0) == 0);
  CHECK(membership(t, 1.0) == 0);
  CHECK(membership(t, 2.5) == 0.5);
  CHECK(membership(Tfn{2, 2, 4}, 2.0) == 1);
  CHECK(membership(Tfn{2, 2, 4}, 3.0) == 0.5);
  CHECK(membership(Tfn{5, 5, 5}, 5.0) == 1);
}

TEST_CASE("alpha cuts") {
  CHECK(alpha_cut(Tfn{1, 2, 3}, 0.0) == Interval<double>{1, 3});
  CHECK(alpha_cut(Tfn{1, 2, 3}, 1.0) == Interval<double>{2, 2});
  CHECK(alpha_cut(Tfn{0, 2, 6}, 0.5) == Interval<double>{1, 4});

  Rng rng(3);
  for (int i = 0; i < 1000; ++i) {
    const Tfn t = test::random_tfn(rng);
    double a = rng.uniform(), b = rng.uniform();
    if (a > b) std::swap(a, b);
    const auto wide = alpha_cut(t, a), narrow = alpha_cut(t, b);
    CHECK(wide.lo <= narrow.lo);
    CHECK(narrow.hi <= wide.hi);
  }
}

TEST_CASE("addition") {
  CHECK(Tfn{1, 2, 3} + Tfn{2, 3, 4} == Tfn{3, 5, 7});
  CHECK(kZero + Tfn{1, 2, 3} == Tfn{1, 2, 3});
  CHECK(add(Tfn{5, 5, 5}, Tfn{1, 2, 3}) == Tfn{6, 7, 8});

  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    // integer-valued so associativity is exact
    auto r = [&] { return Tfn{double(rng.below(10)), double(10 + rng.below(10)), double(20 + rng.below(10))}; };
    const Tfn a = r(), b = r(), c = r();
    CHECK(a + b == b + a);
    CHECK((a + b) + c == a + (b + c));
  }
}

TEST_CASE("defuzz and z-value") {
  CHECK(defuzz(Tfn{2, 4, 6}) == 4);
  CHECK(defuzz(Tfn{1, 2, 5}) == 2.5);
  CHECK(defuzz(Tfn::crisp(7.25)) == 7.25);
  CHECK(z_value(Tfn{1, 2, 3}) == doctest::Approx(2.8).epsilon(1e-12));
  CHECK(z_value(Tfn{0, 2, 4}) == doctest::Approx(3.6).epsilon(1e-12));
  CHECK(z_value(Tfn{5, 5, 5}, {0.2, 0.9}) == 5);

  Rng rng(11);
  for (int i = 0; i < 100000; ++i) {
    const Tfn t = test::random_tfn(rng, 1000);
    REQUIRE(std::abs(z_value(t) - (defuzz(t) + 0.4 * spread(t))) <= 1e-9);
  }
}

TEST_CASE("fuzzy max") {
  CHECK(fuzzy_max(Tfn{1, 2, 3}, Tfn{0, 2, 4}) == Tfn{0, 2, 4});
  const Tfn a{1, 2, 3}, b{1, 2, 3};
  CHECK(&fuzzy_max(a, b) == &a);
  CHECK(fuzzy_max(kZero, Tfn{1, 1, 1}) == Tfn{1, 1, 1});

  Rng rng(13);
  for (int i = 0; i < 1000; ++i) {
    const Tfn x = test::random_tfn(rng), y = test::random_tfn(rng);
    const Tfn& m = fuzzy_max(x, y);
    CHECK((&m == &x || &m == &y));
    CHECK(z_value(m) == std::max(z_value(x), z_value(y)));
  }
}

TEST_CASE("sakawa ranking") {
  CHECK(rank_sakawa(Tfn{1, 3, 5}, Tfn{2, 3, 4}) == std::partial_ordering::greater);
  CHECK(rank_sakawa(Tfn{1, 2, 3}, Tfn{1, 2, 3}) == std::partial_ordering::equivalent);
  CHECK(rank_sakawa(Tfn{0, 1, 2}, Tfn{2, 3, 4}) == std::partial_ordering::less);

  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    auto r = [&] { return Tfn{double(rng.below(3)), double(3 + rng.below(3)), double(6 + rng.below(3))}; };
    const Tfn a = r(), b = r(), c = r();
    const auto ab = rank_sakawa(a, b);
    CHECK(rank_sakawa(b, a) == (ab == 0 ? std::partial_ordering::equivalent
                                : ab < 0 ? std::partial_ordering::greater
                                         : std::partial_ordering::less));
    if (ab <= 0 && rank_sakawa(b, c) <= 0) CHECK(rank_sakawa(a, c) <= 0);
  }
}

TEST_CASE("quartiles") {
  const std::vector<Tfn> one{kZero};
  CHECK(quartiles_defuzz(one) == Quartiles{0, 0, 0});
  const std::vector<Tfn> five{Tfn::crisp(5), Tfn::crisp(1), Tfn::crisp(3), Tfn::crisp(2), Tfn::crisp(4)};
  CHECK(quartiles_defuzz(five) == Quartiles{2, 3, 4});
  const std::vector<Tfn> two{Tfn::crisp(3), Tfn::crisp(1)};
  CHECK(quartiles_defuzz(two) == Quartiles{1.5, 2, 2.5});
  CHECK_THROWS_AS(quartiles_defuzz(std::vector<Tfn>{}), std::domain_error);

  Rng rng(19);
  for (int i = 0; i < 200; ++i) {
    std::vector<Tfn> v(1 + rng.below(12));
    for (auto& t : v) t = test::random_tfn(rng);
    const auto q = quartiles_defuzz(v);
    CHECK(q.q1 <= q.q2);
    CHECK(q.q2 <= q.q3);
  }
}

TEST_CASE("formatting") {
  CHECK(format_tfn(Tfn{57, 83, 108}) == "(57,83,108)");
  CHECK(format_tfn(Tfn{1.5, 2, 2.25}) == "(1.5,2,2.25)");
  CHECK(format_real(0.1) == "0.1");
}
