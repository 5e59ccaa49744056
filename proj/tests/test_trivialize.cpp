#include "karea/trivialize.hpp"

#include <gtest/gtest.h>

using namespace karea;

namespace {

std::shared_ptr<const Mesh> share(Mesh m) { return std::make_shared<const Mesh>(std::move(m)); }

/// Flat line bundle on circle x interval with holonomy `phase` around every
/// circle.
Bundle circle_holonomy(std::shared_ptr<const Mesh> cyl, int n, double phase)
{
	Bundle b = trivial_bundle(cyl, 1);
	const Collar &col = *cyl->collar;
	for (const auto &layer : col.layers) {
		EdgeStep st = cyl->edge_step(layer[n - 1], layer[0]);
		Mat u = Mat::Constant(1, 1, std::polar(1.0, st.forward ? phase : -phase));
		b.transport[st.edge] = u;
	}
	return b;
}

double flat_end_defect(const Bundle &b)
{
	double d = 0.0;
	for (int p : b.base->plaquettes_of(b.base->region("flat_end")))
		d = std::max(d, dist_identity(b.holonomy(p)));
	return d;
}

} // namespace

TEST(Trivialize, BettiNumbers)
{
	EXPECT_EQ(first_betti(cubed_sphere(4, 1.0)), 0);
	EXPECT_EQ(first_betti(torus(2, 4, 1.0)), 2);
	EXPECT_EQ(first_betti(cylinder(circle(5, 1.0), 3, 0.0, 1.0)), 1);
	EXPECT_EQ(first_betti(disk(3, 1.0)), 0);
}

TEST(Trivialize, TreeGaugeMakesTreeEdgesIdentity)
{
	auto m = share(cubed_sphere(4, 1.0));
	Bundle b = perturb(trivial_bundle(m, 2), 0.3, 4);
	TreeGauge t = tree_gauge(b);
	Bundle g = apply_tree_gauge(b, t);
	int tree_edges = 0;
	for (int e = 0; e < m->num_edges(); ++e)
		if (t.tree_edge[e]) {
			++tree_edges;
			EXPECT_LT(dist_identity(g.transport[e]), 1e-13);
		}
	EXPECT_EQ(tree_edges, m->num_vertices - 1);
}

TEST(Trivialize, PureGaugeOnSimplyConnectedMeshes)
{
	std::mt19937_64 rng(21);
	for (auto m : {share(cubed_sphere(6, 1.0)), share(disk(5, 1.0)), share(cube_sphere(4, 2, 1.0))})
		for (int rank : {1, 2, 3}) {
			Bundle b = gauge(trivial_bundle(m, rank), random_gauge(m, rank, rng));
			auto r = trivialize(b, 1e-8);
			ASSERT_TRUE(std::holds_alternative<FrameCertificate>(r)) << m->generator << " rank " << rank;
			EXPECT_LE(std::get<FrameCertificate>(r).residual, 1e-10);
			// the certificate gauge really trivializes the bundle
			EXPECT_LE(max_edge_residual(gauge(b, std::get<FrameCertificate>(r).gauge)), 1e-10);
		}
}

TEST(Trivialize, NearFlatResidualTracksCurvature)
{
	auto m = share(cubed_sphere(6, 1.0));
	std::mt19937_64 rng(8);
	for (double delta : {0.005, 0.01, 0.02}) {
		Bundle b = gauge(perturb_to_curvature(trivial_bundle(m, 1), delta, rng()), random_gauge(m, 1, rng));
		auto r = trivialize(b, 1.0);
		ASSERT_TRUE(std::holds_alternative<FrameCertificate>(r));
		const auto &c = std::get<FrameCertificate>(r);
		EXPECT_NEAR(c.input_norm, delta, 1e-8 * delta);
		EXPECT_DOUBLE_EQ(c.constant_estimate, c.residual / c.input_norm);
		// a near-identity frame exists with residual of order ||R||, far below 1
		EXPECT_LT(c.residual, 0.1);
		EXPECT_LE(max_edge_residual(gauge(b, c.gauge)), c.residual * (1 + 1e-12));
	}
}

TEST(Trivialize, ResidualAboveToleranceIsAnObstruction)
{
	auto m = share(cubed_sphere(6, 1.0));
	Bundle b = perturb_to_curvature(trivial_bundle(m, 1), 0.02, 3);
	auto ok = trivialize(b, 1.0);
	ASSERT_TRUE(std::holds_alternative<FrameCertificate>(ok));
	double res = std::get<FrameCertificate>(ok).residual;
	auto bad = trivialize(b, res / 2);
	ASSERT_TRUE(std::holds_alternative<Obstruction>(bad));
	EXPECT_EQ(std::get<Obstruction>(bad).kind, ObstructionKind::holonomy);
}

TEST(Trivialize, MonopoleIsObstructedByItsChernNumber)
{
	for (auto m : {share(cubed_sphere(8, 1.0)), share(torus(2, 8, two_pi))}) {
		auto r = trivialize(monopole_bundle(m, 1.0), 1.0);
		ASSERT_TRUE(std::holds_alternative<Obstruction>(r));
		EXPECT_EQ(std::get<Obstruction>(r).kind, ObstructionKind::nonzero_chern);
		EXPECT_NEAR(std::get<Obstruction>(r).value, 1.0, 1e-9);
	}
}

TEST(Trivialize, LoopHolonomyIsObstructed)
{
	const int n = 6;
	auto cyl = share(cylinder(circle(n, 1.0), 4, -3.0, 3.0));
	auto r = trivialize(circle_holonomy(cyl, n, pi), 0.1);
	ASSERT_TRUE(std::holds_alternative<Obstruction>(r));
	EXPECT_EQ(std::get<Obstruction>(r).kind, ObstructionKind::holonomy);
	EXPECT_NEAR(std::get<Obstruction>(r).value, 2.0, 1e-12);
	// a small loop holonomy is not an obstruction to near-flatness, but the
	// frame cannot be certified on a mesh with nonfillable loops
	auto s = trivialize(circle_holonomy(cyl, n, 0.01), 0.1);
	ASSERT_TRUE(std::holds_alternative<Obstruction>(s));
	EXPECT_EQ(std::get<Obstruction>(s).kind, ObstructionKind::not_simply_connected);
}

TEST(Trivialize, RejectsNonPositiveTolerance)
{
	auto m = share(disk(2, 1.0));
	EXPECT_THROW(trivialize(trivial_bundle(m, 1), 0.0), Error);
}

TEST(Collar, ProfileValidation)
{
	EXPECT_NO_THROW(CutoffProfile::standard().validate());
	EXPECT_NO_THROW(CutoffProfile::standard(0.5).validate());
	CutoffProfile steep = CutoffProfile::standard();
	for (std::size_t i = 0; i < steep.t.size(); ++i)
		steep.chi[i] = steep.t[i] < 2.4 ? 1.0 : 0.0;
	EXPECT_THROW(steep.validate(), Error);
	CutoffProfile rising = CutoffProfile::standard();
	rising.chi.back() = 0.5;
	EXPECT_THROW(rising.validate(), Error);
	CutoffProfile shortp = CutoffProfile::standard();
	shortp.t.pop_back();
	shortp.chi.pop_back();
	EXPECT_THROW(shortp.validate(), Error);
}

TEST(Collar, FlattenIsIdentityOnTranslationInvariantBundles)
{
	auto slice = cubed_sphere(2, 1.0);
	auto cyl = share(cylinder(slice, 8, -4.0, 4.0));
	auto s = share(slice);
	Bundle sb = perturb(trivial_bundle(s, 2), 0.1, 5);
	Bundle b = trivial_bundle(cyl, 2);
	const Collar &col = *cyl->collar;
	for (const auto &layer : col.layers)
		for (int e = 0; e < s->num_edges(); ++e) {
			auto ed = s->edge(e);
			EdgeStep st = cyl->edge_step(layer[ed[0]], layer[ed[1]]);
			b.transport[st.edge] = st.forward ? sb.transport[e] : Mat(sb.transport[e].adjoint());
		}
	Bundle f = flatten_collar(b);
	for (int e = 0; e < cyl->num_edges(); ++e)
		EXPECT_LT((f.transport[e] - b.transport[e]).norm(), 1e-14);
}

TEST(Collar, ExtensionBoundAndFlatEnd)
{
	auto cyl = share(cylinder(cubed_sphere(4, 1.0), 8, -4.0, 4.0));
	std::mt19937_64 rng(17);
	for (int rank : {1, 2})
		for (double delta : {0.005, 0.02}) {
			Bundle b = flatten_collar(perturb_to_curvature(trivial_bundle(cyl, rank), delta, rng()));
			const double din = curvature(b).sup_norm;
			SubMesh end = collar_end_slice(*cyl);
			auto r = trivialize(restrict_bundle(b, end), 1.0);
			ASSERT_TRUE(std::holds_alternative<FrameCertificate>(r));
			ExtensionResult ex = collar_extend(b, CutoffProfile::standard(), 0.05, std::get<FrameCertificate>(r));
			const double w = ex.omega_norm;
			EXPECT_LE(w, 0.05);
			EXPECT_LE(curvature(ex.bundle).sup_norm, 1.05 * (din + w + w * w));
			EXPECT_EQ(flat_end_defect(ex.bundle), 0.0);
			EXPECT_TRUE(ex.bundle.base->boundary_of_boundary_zero());
			EXPECT_TRUE(ex.bundle.base->is_consistently_oriented());
			// the old part of the mesh keeps its transports
			for (int e = 0; e < cyl->num_edges(); ++e) {
				auto ed = cyl->edge(e);
				EdgeStep st = ex.bundle.base->edge_step(ed[0], ed[1]);
				EXPECT_LT((ex.bundle.along(st) - b.transport[e]).norm(), 1e-14);
			}
		}
}

TEST(Collar, ExtensionRefusesLargeSliceConnection)
{
	auto cyl = share(cylinder(cubed_sphere(4, 1.0), 8, -4.0, 4.0));
	Bundle b = flatten_collar(perturb_to_curvature(trivial_bundle(cyl, 1), 0.5, 2));
	SubMesh end = collar_end_slice(*cyl);
	auto r = trivialize(restrict_bundle(b, end), 10.0);
	ASSERT_TRUE(std::holds_alternative<FrameCertificate>(r));
	EXPECT_THROW(collar_extend(b, CutoffProfile::standard(), 1e-6, std::get<FrameCertificate>(r)), Error);
	EXPECT_THROW(collar_extend(b, CutoffProfile::standard(), 1.0, std::nullopt), Error);
}
