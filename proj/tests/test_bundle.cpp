#include "karea/bundle.hpp"

#include <gtest/gtest.h>

using namespace karea;

namespace {

std::shared_ptr<const Mesh> share(Mesh m) { return std::make_shared<const Mesh>(std::move(m)); }

Bundle random_bundle(std::shared_ptr<const Mesh> m, int rank, double amp, std::uint64_t seed)
{
	return perturb(trivial_bundle(m, rank), amp, seed);
}

} // namespace

TEST(Bundle, TrivialBundleIsFlat)
{
	auto m = share(cubed_sphere(4, 1.0));
	auto r = curvature(trivial_bundle(m, 3));
	EXPECT_EQ(r.sup_norm, 0.0);
	EXPECT_EQ(static_cast<int>(r.field_strength.size()), m->num_plaquettes());
}

TEST(Bundle, CurvatureIsGaugeInvariant)
{
	auto m = share(cubed_sphere(4, 1.0));
	std::mt19937_64 rng(7);
	for (int rank : {1, 2, 3})
		for (int trial = 0; trial < 5; ++trial) {
			Bundle b = random_bundle(m, rank, 0.2, rng());
			Bundle g = gauge(b, random_gauge(m, rank, rng));
			auto rb = curvature(b), rg = curvature(g);
			EXPECT_NEAR(rb.sup_norm, rg.sup_norm, 1e-11);
			for (int p = 0; p < m->num_plaquettes(); ++p) {
				// the field strength conjugates by the frame at the base corner
				Eigen::VectorXd eb = normal_eigenvalues(rb.field_strength[p]).cwiseAbs();
				Eigen::VectorXd eg = normal_eigenvalues(rg.field_strength[p]).cwiseAbs();
				std::sort(eb.data(), eb.data() + eb.size());
				std::sort(eg.data(), eg.data() + eg.size());
				EXPECT_LT((eb - eg).norm(), 1e-10);
			}
		}
}

TEST(Bundle, GaugeComposition)
{
	auto m = share(torus(2, 4, 1.0));
	std::mt19937_64 rng(3);
	Bundle b = random_bundle(m, 2, 0.3, rng());
	auto g1 = random_gauge(m, 2, rng), g2 = random_gauge(m, 2, rng);
	Bundle twice = gauge(gauge(b, g1), g2);
	Bundle once = gauge(b, compose(g2, g1));
	for (int e = 0; e < m->num_edges(); ++e)
		EXPECT_LT((twice.transport[e] - once.transport[e]).norm(), 1e-12);
	EXPECT_LT(max_unitarity_defect(twice), 1e-12);
}

TEST(Bundle, SurfaceMonopoleHasUniformCurvature)
{
	// oracle: constant field 2 pi k / A on every plaquette of a flat torus
	for (int k : {-3, -1, 1, 2, 3}) {
		auto m = share(torus(2, 8, two_pi));
		auto r = curvature(monopole_bundle(m, static_cast<double>(k)));
		const double expect = two_pi * std::abs(k) / m->total_measure(2);
		for (const auto &f : r.field_strength)
			EXPECT_NEAR(norm_normal(f), expect, 1e-12);
	}
}

TEST(Bundle, MetricScalingByTwoIsBitExact)
{
	auto m = share(torus(2, 6, 1.0));
	auto s = share(scale_metric(*m, 2.0));
	std::mt19937_64 rng(11);
	for (int trial = 0; trial < 10; ++trial) {
		Bundle b = random_bundle(m, 2, 0.3, rng());
		Bundle bs = b;
		bs.base = s;
		EXPECT_EQ(curvature(bs).sup_norm, curvature(b).sup_norm / 4.0);
	}
}

TEST(Bundle, PerturbToCurvatureHitsTarget)
{
	auto m = share(cubed_sphere(4, 1.0));
	for (double target : {0.005, 0.02, 0.1}) {
		Bundle b = perturb_to_curvature(trivial_bundle(m, 1), target, 5);
		EXPECT_NEAR(curvature(b).sup_norm / target, 1.0, 1e-8);
		EXPECT_LT(max_unitarity_defect(b), 1e-12);
	}
}

TEST(Bundle, DirectSumCurvatureIsTheMaximum)
{
	auto m = share(torus(2, 6, two_pi));
	Bundle a = monopole_bundle(m, 1.0), b = monopole_bundle(m, 3.0);
	Bundle s = direct_sum(a, b);
	EXPECT_EQ(s.rank, 2);
	EXPECT_NEAR(curvature(s).sup_norm, std::max(curvature(a).sup_norm, curvature(b).sup_norm), 1e-12);
}

TEST(Bundle, PullbackAlongIdentityIsTheSameBundle)
{
	auto m = share(cubed_sphere(4, 1.0));
	Bundle b = random_bundle(m, 2, 0.2, 9);
	Bundle p = pullback(b, identity_map(m));
	for (int e = 0; e < m->num_edges(); ++e)
		EXPECT_LT((p.transport[e] - b.transport[e]).norm(), 1e-14);
}

TEST(Bundle, CoveringPullbackPreservesCurvature)
{
	auto m = share(torus(2, 4, two_pi));
	CoveringMap cov = covering(m, {2, 2});
	std::mt19937_64 rng(2);
	for (int trial = 0; trial < 5; ++trial) {
		Bundle b = random_bundle(m, 1, 0.3, rng());
		Bundle p = pullback(b, cov.as_map());
		EXPECT_NEAR(curvature(p).sup_norm, curvature(b).sup_norm, 1e-12);
	}
}

TEST(Bundle, DirectImageIsNoMoreCurvedThanTheBundle)
{
	auto m = share(torus(2, 4, two_pi));
	CoveringMap cov = covering(m, {2, 2});
	std::mt19937_64 rng(4);
	for (int trial = 0; trial < 20; ++trial) {
		Bundle e = perturb(monopole_bundle(cov.total, 1.0), 0.05, rng());
		Bundle d = direct_image(e, cov);
		EXPECT_EQ(d.rank, 4);
		EXPECT_LE(curvature(d).sup_norm, curvature(e).sup_norm + 1e-12);
	}
	// the direct image of a pullback contains the original bundle as a summand
	Bundle b = random_bundle(m, 1, 0.2, 8);
	Bundle d = direct_image(pullback(b, cov.as_map()), cov);
	EXPECT_NEAR(curvature(d).sup_norm, curvature(b).sup_norm, 1e-12);
}

TEST(Bundle, MismatchedBasesAreRejected)
{
	auto a = share(torus(2, 4, 1.0));
	auto b = share(torus(2, 5, 1.0));
	Bundle x = trivial_bundle(a, 1);
	std::mt19937_64 rng(1);
	EXPECT_THROW(gauge(x, random_gauge(b, 1, rng)), Error);
	EXPECT_THROW(direct_sum(x, trivial_bundle(b, 1)), Error);
}
