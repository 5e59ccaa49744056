#include "karea/chern.hpp"

#include <gtest/gtest.h>

using namespace karea;

namespace {

std::shared_ptr<const Mesh> share(Mesh m) { return std::make_shared<const Mesh>(std::move(m)); }

double c1(const Bundle &b) { return chern_densities(b).total("c1"); }

} // namespace

TEST(Chern, SurfaceMonopolesAreIntegral)
{
	for (auto m : {share(torus(2, 8, two_pi)), share(cubed_sphere(8, 1.0))})
		for (int k = -3; k <= 3; ++k)
			EXPECT_NEAR(c1(monopole_bundle(m, static_cast<double>(k))), k, 1e-9) << m->generator << " k=" << k;
}

TEST(Chern, FirstChernNumberIsGaugeAndDeformationInvariant)
{
	auto m = share(cubed_sphere(6, 1.0));
	std::mt19937_64 rng(5);
	for (int k : {-2, 1, 3}) {
		Bundle b = monopole_bundle(m, static_cast<double>(k));
		for (int trial = 0; trial < 4; ++trial) {
			Bundle g = gauge(perturb(b, 0.05, rng()), random_gauge(m, 1, rng));
			EXPECT_NEAR(c1(g), k, 1e-9);
		}
	}
}

TEST(Chern, FirstChernNumberIsAdditiveUnderDirectSum)
{
	auto m = share(torus(2, 6, two_pi));
	Bundle s = direct_sum(monopole_bundle(m, 2.0), perturb(monopole_bundle(m, -3.0), 0.05, 1));
	auto rep = chern_densities(s);
	EXPECT_NEAR(rep.total("c1"), -1.0, 1e-9);
	EXPECT_LT(rep.residuals.at("c1"), 1e-9);
}

TEST(Chern, DensitiesSumToTotals)
{
	auto m = share(cubed_sphere(4, 1.0));
	auto rep = chern_densities(perturb(monopole_bundle(m, 1.0), 0.1, 3));
	double s = 0.0;
	for (double d : rep.densities.at("c1"))
		s += d;
	EXPECT_NEAR(s, rep.total("c1"), 1e-12);
}

TEST(Chern, FourTorusProductLineBundle)
{
	// c1 = a w1 + b w2 gives c1^2 = 2ab; a line bundle has c2 = 0
	auto m = share(torus(4, 4, 1.0));
	for (auto [a, b] : {std::pair{1, 1}, std::pair{1, 2}, std::pair{-1, 3}}) {
		auto rep = chern_densities(monopole_bundle(m, std::vector<double>{double(a), double(b)}));
		EXPECT_NEAR(rep.total("c1^2"), 2.0 * a * b, 1e-9);
		EXPECT_NEAR(rep.total("c2"), 0.0, 1e-9);
	}
}

TEST(Chern, FourTorusSplitBundle)
{
	// L(a, 0) + L(0, b): c1^2 = 2ab and c2 = c1(L1) c1(L2) = ab
	auto m = share(torus(4, 4, 1.0));
	const int a = 2, b = 1;
	Bundle s = direct_sum(monopole_bundle(m, std::vector<double>{double(a), 0.0}),
	                      monopole_bundle(m, std::vector<double>{0.0, double(b)}));
	auto rep = chern_densities(s);
	EXPECT_NEAR(rep.total("c1^2"), 2.0 * a * b, 1e-9);
	EXPECT_NEAR(rep.total("c2"), double(a * b), 1e-9);
	std::mt19937_64 rng(2);
	auto rg = chern_densities(gauge(s, random_gauge(m, 2, rng)));
	EXPECT_NEAR(rg.total("c2"), double(a * b), 1e-9);
}

TEST(Chern, PolynomialGrammar)
{
	auto p = ChernPolynomial::parse("c1^2 - 2 c2");
	EXPECT_EQ(p.dim, 4);
	EXPECT_DOUBLE_EQ(p.terms.at("c1^2"), 1.0);
	EXPECT_DOUBLE_EQ(p.terms.at("c2"), -2.0);
	auto h = ChernPolynomial::parse("1/2 c1*c1");
	EXPECT_DOUBLE_EQ(h.terms.at("c1^2"), 0.5);
	auto q = ChernPolynomial::parse("-3c1");
	EXPECT_EQ(q.dim, 2);
	EXPECT_DOUBLE_EQ(q.terms.at("c1"), -3.0);
	// printing and parsing again gives the same polynomial
	for (const auto &text : {"c1^2 - 2 c2", "1/3 c1^2 + 0.25 c2", "-c1"}) {
		auto a = ChernPolynomial::parse(text);
		auto b = ChernPolynomial::parse(a.str());
		ASSERT_EQ(a.terms.size(), b.terms.size()) << text;
		for (auto &[k, v] : a.terms)
			EXPECT_NEAR(b.terms.at(k), v, 1e-11) << text;
	}
	for (const auto &bad : {"", "c3", "c1 + c2", "c1 c2", "2", "c1 ++ c1", "1/0 c1"})
		EXPECT_THROW(ChernPolynomial::parse(bad), Error) << bad;
}

TEST(Chern, ChernNumberOfAPolynomial)
{
	auto m = share(torus(4, 4, 1.0));
	Bundle b = monopole_bundle(m, std::vector<double>{1.0, 2.0});
	EXPECT_NEAR(chern_number(b, ChernPolynomial::parse("1/2 c1^2 - c2")), 2.0, 1e-9);
	EXPECT_THROW(chern_number(b, ChernPolynomial::parse("c1")), Error);
}

TEST(Chern, AdmissibilityNeedsANonzeroChernNumber)
{
	auto m = share(torus(2, 6, two_pi));
	EXPECT_TRUE(in_k_cross(monopole_bundle(m, 1.0), 1e-6).admissible);
	EXPECT_FALSE(in_k_cross(perturb(trivial_bundle(m, 1), 0.1, 1), 1e-6).admissible);
}

TEST(Chern, OddDimensionsAreUnsupported)
{
	auto m = share(cube_sphere(4, 2, 1.0));
	EXPECT_THROW(chern_densities(trivial_bundle(m, 1)), Error);
}
