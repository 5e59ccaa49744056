#include "karea/surgery.hpp"

#include <gtest/gtest.h>

using namespace karea;

namespace {

struct Band {
	std::shared_ptr<const Mesh> torus_mesh;
	SurgeryPlan plan;
	SurgeryResult result;
	std::shared_ptr<const Mesh> mesh;
};

Band band_surgery()
{
	Band b;
	b.torus_mesh = std::make_shared<const Mesh>(torus(2, 8, two_pi));
	b.plan = band_plan(b.torus_mesh, 0, 2, 2);
	b.result = surgery(b.plan);
	b.mesh = std::make_shared<const Mesh>(b.result.mesh);
	return b;
}

const TransplantResult &expect_result(const TransplantOutcome &o)
{
	if (auto *x = std::get_if<Obstruction>(&o))
		ADD_FAILURE() << "unexpected obstruction " << to_string(x->kind) << " at " << x->witness;
	return std::get<TransplantResult>(o);
}

} // namespace

TEST(Transplant, BandSurgeryDecomposesTheIntegral)
{
	Band s = band_surgery();
	std::mt19937_64 rng(31);
	for (int rank : {1, 2})
		for (double amp : {0.005, 0.02}) {
			Bundle b = gauge(perturb(trivial_bundle(s.mesh, rank), amp, rng()), random_gauge(s.mesh, rank, rng));
			auto out = transplant(b, s.result, s.plan, 0.5);
			ASSERT_TRUE(std::holds_alternative<TransplantResult>(out));
			const auto &t = expect_result(out);
			EXPECT_LE(t.identity_residual, 1e-6);
			EXPECT_EQ(t.frame_source, "double");
			EXPECT_LE(t.omega_norm, 0.5);
			// both capped pieces are closed surfaces: the source torus and a sphere
			EXPECT_EQ(t.bundle_MY.base->euler_characteristic(), 0);
			EXPECT_EQ(t.bundle_XY.base->euler_characteristic(), 2);
			EXPECT_TRUE(t.bundle_MY.base->is_closed());
			EXPECT_TRUE(t.bundle_XY.base->is_closed());
		}
}

TEST(Transplant, MonopoleChargeStaysOnTheSourceSide)
{
	Band s = band_surgery();
	for (int k : {-1, 1, 2}) {
		auto out = transplant(monopole_bundle(s.mesh, double(k)), s.result, s.plan, 0.5);
		ASSERT_TRUE(std::holds_alternative<TransplantResult>(out)) << "k=" << k;
		const auto &t = expect_result(out);
		auto it = t.integrals.at("c1");
		EXPECT_NEAR(it[0], k, 1e-9);
		EXPECT_NEAR(it[0], it[1] + it[2], 1e-9);
		EXPECT_NEAR(std::round(it[1]) + std::round(it[2]), k, 1e-12);
		EXPECT_NEAR(it[1], std::round(it[1]), 1e-6);
		EXPECT_NEAR(it[2], std::round(it[2]), 1e-6);
	}
}

TEST(Transplant, RejectsForeignBundles)
{
	Band s = band_surgery();
	Bundle b = trivial_bundle(s.torus_mesh, 1);
	EXPECT_THROW(transplant(b, s.result, s.plan, 0.5), Error);
	EXPECT_THROW(transplant(trivial_bundle(s.mesh, 1), s.result, s.plan, 0.0), Error);
}

TEST(Transplant, CircleCutsAreObstructed)
{
	// connected sums of surfaces cut along a circle; the frame cannot be
	// certified there whatever the loop holonomy is
	Mesh t = torus(2, 8, two_pi);
	auto cs = connected_sum(t, t, 0, 0);
	auto m = std::make_shared<const Mesh>(cs.surgery.mesh);
	std::mt19937_64 rng(4);
	std::vector<Bundle> corpus{monopole_bundle(m, 1.0), perturb(trivial_bundle(m, 1), 0.05, rng()),
	                           perturb(trivial_bundle(m, 2), 0.05, rng())};
	for (const auto &b : corpus) {
		auto out = transplant(b, cs.surgery, cs.plan, 0.5);
		ASSERT_TRUE(std::holds_alternative<Obstruction>(out));
		auto kind = std::get<Obstruction>(out).kind;
		EXPECT_TRUE(kind == ObstructionKind::not_simply_connected || kind == ObstructionKind::holonomy);
	}
}

TEST(Transplant, FourTorusSumCollapsePullback)
{
	Mesh t = torus(4, 4, 1.0);
	auto cs = connected_sum(t, t, 0, 0);
	auto m1 = std::make_shared<const Mesh>(t);
	Bundle b = collapse_map_pullback(monopole_bundle(m1, std::vector<double>{1.0, 2.0}), cs);
	auto rep = chern_densities(b);
	// degree one: the pullback keeps the Chern numbers of the summand
	EXPECT_NEAR(rep.total("c1^2"), 4.0, 0.02 * 4.0);
	EXPECT_NEAR(rep.total("c2"), 0.0, 1e-6);
	auto out = transplant(b, cs.surgery, cs.plan, 0.5);
	ASSERT_TRUE(std::holds_alternative<TransplantResult>(out));
	const auto &r = expect_result(out);
	EXPECT_EQ(r.frame_source, "slice");
	EXPECT_LE(r.identity_residual, 1e-4);
}

TEST(Transplant, CollapsePullbackKeepsSurfaceDegree)
{
	Mesh t = torus(2, 6, two_pi);
	auto cs = connected_sum(t, t, 3, 7);
	auto m1 = std::make_shared<const Mesh>(t);
	for (int k : {-2, 1, 3})
		EXPECT_NEAR(chern_densities(collapse_map_pullback(monopole_bundle(m1, double(k)), cs)).total("c1"), k, 1e-9);
	EXPECT_THROW(collapse_map_pullback(trivial_bundle(std::make_shared<const Mesh>(torus(2, 5, 1.0)), 1), cs), Error);
}

TEST(Threshold, ScanRespectsTheFluxBound)
{
	// |c1| <= ||R|| A / 2 pi, so a nontrivial line bundle has ||R|| >= 2 pi / A
	Band s = band_surgery();
	auto scan = threshold_scan(surface_corpus(s.mesh, {-2, -1, 0, 1, 2}, {0.0, 0.05, 0.3}, 9));
	const double oracle = two_pi / s.mesh->total_measure(2);
	EXPECT_EQ(scan.corpus + scan.skipped, 15);
	EXPECT_GT(scan.nontrivial, 0);
	EXPECT_GE(scan.delta_star, oracle * (1 - 1e-9));
	EXPECT_TRUE(std::isfinite(scan.delta_star));
	for (std::size_t i = 0; i < scan.norms.size(); ++i) {
		if (scan.norms[i] < scan.delta_star) {
			EXPECT_LE(scan.max_abs_chern[i], 1e-6);
		}
	}
}

TEST(Threshold, TrivialCorpusHasNoThreshold)
{
	Band s = band_surgery();
	auto scan = threshold_scan(surface_corpus(s.mesh, {0}, {0.01, 0.1}, 1, 3));
	EXPECT_EQ(scan.nontrivial, 0);
	EXPECT_TRUE(std::isinf(scan.delta_star));
}
