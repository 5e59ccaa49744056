// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Oracles are computed here independently of the library
// where one exists (flux sums, 2 pi k / A, scaling and covering identities).

#include "karea/karea.hpp"
#include "karea/surgery.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>

using namespace karea;

namespace {

using Clock = std::chrono::steady_clock;

std::shared_ptr<const Mesh> share(Mesh m) { return std::make_shared<const Mesh>(std::move(m)); }

struct Outcome {
	bool pass = true;
	std::ostringstream detail;

	void require(bool ok, const std::string &what)
	{
		if (!ok) {
			if (pass)
				detail << "failed: " << what << "; ";
			pass = false;
		}
	}
};

std::string fmt(double x)
{
	char buf[32];
	std::snprintf(buf, sizeof buf, "%.3g", x);
	return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

/// Holonomy around the cut circle of a surface connected sum.
Mat cut_holonomy(const Bundle &b)
{
	const Mesh &m = *b.base;
	const auto &cut = m.collar->layers[m.collar->cut_layer];
	SubMesh c = induced(m, cut, 1);
	const Mesh &ring = c.mesh;
	std::vector<std::vector<int>> nbr(ring.num_vertices);
	for (int e = 0; e < ring.num_edges(); ++e) {
		nbr[ring.edge(e)[0]].push_back(ring.edge(e)[1]);
		nbr[ring.edge(e)[1]].push_back(ring.edge(e)[0]);
	}
	Mat u = identity(b.rank);
	int prev = -1, v = 0;
	for (int step = 0; step < ring.num_vertices; ++step) {
		int next = nbr[v][0] != prev ? nbr[v][0] : nbr[v][1];
		u = b.along(m.edge_step(c.to_parent[v], c.to_parent[next])) * u;
		prev = v;
		v = next;
	}
	return u;
}

// 1. Chern integrality of monopoles.
Outcome criterion1()
{
	Outcome o;
	double worst = 0.0, slowest = 0.0;
	for (auto m : {share(cubed_sphere(16, 1.0)), share(torus(2, 16, two_pi))})
		for (int k = -3; k <= 3; ++k) {
			auto t0 = Clock::now();
			double c1 = chern_densities(monopole_bundle(m, double(k))).total("c1");
			double dt = seconds_since(t0);
			worst = std::max(worst, std::abs(c1 - k));
			slowest = std::max(slowest, dt);
			o.require(std::abs(c1 - k) <= 1e-9, m->generator + " k=" + std::to_string(k));
			o.require(dt < 1.0, "runtime");
		}
	o.detail << "max |c1 - k| = " << fmt(worst) << ", slowest " << fmt(slowest) << " s";
	return o;
}

// 2. Curvature of the flux-one bundle on the unit sphere.
Outcome criterion2()
{
	Outcome o;
	const double oracle = 2 * pi / (4 * pi); // 2 pi |k| / area of the unit sphere
	double prev = std::numeric_limits<double>::infinity();
	for (int n : {8, 16, 32}) {
		auto m = share(cubed_sphere(n, 1.0));
		double r = curvature(monopole_bundle(m, 1.0)).sup_norm;
		double rel = std::abs(r / oracle - 1.0);
		o.detail << "N=" << n << ": " << fmt(r) << " (" << fmt(100 * rel) << "%) ";
		if (n >= 16)
			o.require(rel <= 0.02, "within 2% at N=" + std::to_string(n));
		o.require(rel < prev, "monotone at N=" + std::to_string(n));
		prev = rel;
	}
	return o;
}

// 3. Metric scaling by c = 2.
Outcome criterion3()
{
	Outcome o;
	auto m = share(torus(2, 8, two_pi));
	auto s = share(scale_metric(*m, 2.0));
	std::mt19937_64 rng(303);
	int exact = 0;
	double worst = 0.0;
	for (int i = 0; i < 20; ++i) {
		std::uint64_t seed = rng();
		// even draws are perturbed line bundles, odd ones rank-2 sums
		Bundle b = i % 2 == 0 ? perturb(monopole_bundle(m, 1.0), 0.1, seed)
		                      : perturb(direct_sum(monopole_bundle(m, 1.0), trivial_bundle(m, 1)), 0.1, seed);
		Bundle bs = b;
		bs.base = s;
		if (curvature(bs).sup_norm == curvature(b).sup_norm / 4.0)
			++exact;
		if (b.rank == 1) {
			OptimizerConfig cfg;
			double lb = minimize_curvature(b, cfg).lower_bound;
			double ls = minimize_curvature(bs, cfg).lower_bound;
			worst = std::max(worst, std::abs(ls / lb / 4.0 - 1.0));
		}
	}
	o.require(exact == 20, "bit-exact ||R|| scaling");
	o.require(worst <= 1e-3, "lower bound ratio");
	o.detail << exact << "/20 bit-exact, max |ratio/4 - 1| = " << fmt(worst);
	return o;
}

// 4. Covering experiment and direct-image monotonicity.
Outcome criterion4()
{
	Outcome o;
	auto m = share(torus(2, 4, two_pi));
	OptimizerConfig cfg;
	cfg.start_amplitude = 0.05;
	cfg.seed = 404;
	auto r = covering_experiment(m, {2, 2}, Sector{1, {1.0}}, cfg);
	o.require(std::abs(r.ratio / 4.0 - 1.0) <= 0.01, "x4 bound ratio");
	CoveringMap cov = covering(m, {2, 2});
	std::mt19937_64 rng(4040);
	double worst = -std::numeric_limits<double>::infinity();
	for (int i = 0; i < 100; ++i) {
		const int rank = 1 + i % 2;
		Bundle e = perturb(trivial_bundle(cov.total, rank), 0.02 + 0.2 * (i % 5), rng());
		if (i % 3 == 0)
			e = perturb(monopole_bundle(cov.total, double(1 + i % 4)), 0.05, rng());
		double excess = curvature(direct_image(e, cov)).sup_norm - curvature(e).sup_norm;
		worst = std::max(worst, excess);
	}
	o.require(worst <= 1e-12, "direct image monotonicity");
	o.detail << "ratio " << fmt(r.ratio) << ", max ||R_image|| - ||R|| = " << fmt(worst);
	return o;
}

// 5. Trivialization certificates and obstructions.
Outcome criterion5()
{
	Outcome o;
	auto t0 = Clock::now();
	std::mt19937_64 rng(505);
	// (a) pure gauge on simply connected meshes
	double flat_worst = 0.0;
	for (auto m : {share(cubed_sphere(8, 1.0)), share(disk(6, 1.0)), share(cube_sphere(4, 2, 1.0))})
		for (int rank : {1, 2}) {
			Bundle b = gauge(trivial_bundle(m, rank), random_gauge(m, rank, rng));
			auto r = trivialize(b, 1e-8);
			if (auto *c = std::get_if<FrameCertificate>(&r))
				flat_worst = std::max(flat_worst, c->residual);
			else
				flat_worst = std::numeric_limits<double>::infinity();
		}
	o.require(flat_worst <= 1e-10, "(a) flat residual");
	// (b) calibrated constant on S^2(N=8), held-out inputs
	auto s2 = share(cubed_sphere(8, 1.0));
	Calibration cal = calibrate_constant(s2, 1, 5050, 30);
	double lo = std::numeric_limits<double>::infinity(), hi = 0.0, ratio = 0.0;
	int ok = 0;
	for (int i = 0; i < 50; ++i) {
		const double delta = std::array{0.005, 0.01, 0.02}[i % 3];
		Bundle b = gauge(perturb_to_curvature(trivial_bundle(s2, 1), delta, rng()), random_gauge(s2, 1, rng));
		auto r = trivialize(b, cal.constant * delta * 2.0);
		if (auto *c = std::get_if<FrameCertificate>(&r)) {
			++ok;
			lo = std::min(lo, c->constant_estimate);
			hi = std::max(hi, c->constant_estimate);
			ratio = std::max(ratio, c->residual / (cal.constant * delta));
		}
	}
	o.require(ok == 50, "(b) every input certified");
	o.require(ratio <= 1.0, "(b) residual <= C_mesh delta");
	o.require(hi / lo <= 10.0, "(b) constant spread");
	// (c) obstructions
	auto mono = trivialize(monopole_bundle(s2, 1.0), 1.0);
	bool mono_ok = std::holds_alternative<Obstruction>(mono);
	o.require(mono_ok, "(c) monopole obstruction");
	const int n = 8;
	auto cyl = share(cylinder(circle(n, 1.0), 4, -3.0, 3.0));
	Bundle h = trivial_bundle(cyl, 1);
	for (const auto &layer : cyl->collar->layers) {
		EdgeStep st = cyl->edge_step(layer[n - 1], layer[0]);
		h.transport[st.edge] = Mat::Constant(1, 1, cplx(-1.0, 0.0));
	}
	auto hol = trivialize(h, 0.1);
	bool hol_ok = std::holds_alternative<Obstruction>(hol);
	o.require(hol_ok, "(c) holonomy -1 obstruction");
	double dt = seconds_since(t0);
	o.require(dt < 30.0, "runtime");
	o.detail << "(a) " << fmt(flat_worst) << "; (b) C_mesh " << fmt(cal.constant) << ", max residual/(C delta) " << fmt(ratio)
	         << ", spread " << fmt(hi / lo) << "; (c) "
	         << (mono_ok ? to_string(std::get<Obstruction>(mono).kind) : "certificate") << ", "
	         << (hol_ok ? to_string(std::get<Obstruction>(hol).kind) : "certificate") << "; " << fmt(dt) << " s";
	return o;
}

// 6. Collar extension bound and exact flat end.
Outcome criterion6()
{
	Outcome o;
	auto cyl = share(cylinder(cubed_sphere(4, 1.0), 8, -4.0, 4.0));
	std::mt19937_64 rng(606);
	std::uniform_real_distribution<double> pick(0.001, 0.02);
	const double eps0 = 0.05;
	double slack = std::numeric_limits<double>::infinity(), defect = 0.0, omega = 0.0;
	int done = 0;
	for (int i = 0; i < 50; ++i) {
		const int rank = 1 + i % 2;
		const double delta = pick(rng);
		Bundle b = perturb_to_curvature(trivial_bundle(cyl, rank), delta, rng());
		b = gauge(b, random_gauge(cyl, rank, rng));
		auto r = trivialize(restrict_bundle(b, collar_end_slice(*cyl)), 1.0);
		if (!std::holds_alternative<FrameCertificate>(r))
			continue;
		ExtensionResult ex;
		try {
			ex = collar_extend(b, CutoffProfile::standard(), eps0, std::get<FrameCertificate>(r));
		} catch (const Error &) {
			continue;
		}
		++done;
		omega = std::max(omega, ex.omega_norm);
		const double din = curvature(b).sup_norm;
		const double out = curvature(ex.bundle).sup_norm;
		slack = std::min(slack, 1.05 * (din + eps0 + eps0 * eps0) - out);
		const Mesh &em = *ex.bundle.base;
		for (int p : em.plaquettes_of(em.region("flat_end")))
			defect = std::max(defect, dist_identity(ex.bundle.holonomy(p)));
	}
	o.require(done == 50, "every input extended");
	o.require(slack >= 0.0, "curvature bound");
	o.require(defect == 0.0, "flat end");
	o.detail << done << "/50 extended, min bound slack " << fmt(slack) << ", max omega " << fmt(omega) << ", flat end defect "
	         << defect;
	return o;
}

// 7. Surgery bookkeeping on the 1-surgered torus.
Outcome criterion7()
{
	Outcome o;
	auto t0 = Clock::now();
	auto t = share(torus(2, 8, two_pi));
	auto plan = band_plan(t, 0, 2, 2);
	auto sr = surgery(plan);
	auto s = share(sr.mesh);
	std::mt19937_64 rng(707);
	std::vector<Bundle> corpus;
	for (int rank : {1, 2})
		for (double a : {0.005, 0.01, 0.02})
			corpus.push_back(gauge(perturb(trivial_bundle(s, rank), a, rng()), random_gauge(s, rank, rng)));
	for (int k : {-1, 1, 2})
		corpus.push_back(gauge(perturb(monopole_bundle(s, double(k)), 0.01, rng()), random_gauge(s, 1, rng)));
	double residual = 0.0;
	int obstructed = 0;
	for (const auto &b : corpus) {
		auto out = transplant(b, sr, plan, 0.5);
		if (auto *r = std::get_if<TransplantResult>(&out))
			residual = std::max(residual, r->identity_residual);
		else
			++obstructed;
	}
	o.require(obstructed == 0, "transplant obstructed");
	o.require(residual <= 1e-6, "identity residual");
	auto scan = threshold_scan(surface_corpus(s, {-2, -1, 0, 1, 2}, {0.0, 0.02, 0.05, 0.2}, 7070, 2));
	const double flux_bound = two_pi / s->total_measure(2);
	bool below_trivial = true;
	for (std::size_t i = 0; i < scan.norms.size(); ++i)
		if (scan.norms[i] < scan.delta_star && scan.max_abs_chern[i] > 1e-6)
			below_trivial = false;
	o.require(scan.delta_star > 0.0 && std::isfinite(scan.delta_star), "delta* > 0");
	o.require(below_trivial, "bundles below delta* are trivial");
	o.require(scan.delta_star >= flux_bound * (1 - 1e-9), "delta* >= 2 pi / A");
	double dt = seconds_since(t0);
	o.require(dt < 60.0, "runtime");
	o.detail << corpus.size() << " transplants, max residual " << fmt(residual) << "; delta* " << fmt(scan.delta_star)
	         << " (2 pi / A = " << fmt(flux_bound) << ", " << scan.nontrivial << "/" << scan.corpus << " nontrivial); " << fmt(dt)
	         << " s";
	return o;
}

// 8. Surgery bookkeeping on T^4 # T^4.
Outcome criterion8()
{
	Outcome o;
	auto t0 = Clock::now();
	Mesh t = torus(4, 4, 1.0);
	auto cs = connected_sum(t, t, 0, 0);
	auto m1 = share(t);
	auto s = share(cs.surgery.mesh);
	Bundle base = collapse_map_pullback(monopole_bundle(m1, std::vector<double>{1.0, 2.0}), cs);
	std::vector<Bundle> corpus{base, perturb(base, 0.002, 808), gauge(perturb(base, 0.005, 809), [&] {
		                           std::mt19937_64 rng(810);
		                           return random_gauge(s, 1, rng);
	                           }())};
	double residual = 0.0, integrality = 0.0;
	for (const auto &b : corpus) {
		double c11 = chern_densities(b).total("c1^2");
		double nearest = std::round(c11);
		integrality = std::max(integrality, std::abs(c11 - nearest) / std::max(1.0, std::abs(nearest)));
		o.require(nearest == 4.0, "c1^2 of the pulled back (1,2) bundle");
		auto out = transplant(b, cs.surgery, cs.plan, 0.5);
		if (auto *r = std::get_if<TransplantResult>(&out))
			residual = std::max(residual, r->identity_residual);
		else
			o.require(false, "transplant obstructed: " + std::string(to_string(std::get<Obstruction>(out).kind)));
	}
	o.require(residual <= 1e-4, "identity residual");
	o.require(integrality <= 0.02, "c1^2 integrality");
	double dt = seconds_since(t0);
	o.require(dt < 600.0, "runtime");
	o.detail << "max residual " << fmt(residual) << ", c1^2 integrality error " << fmt(100 * integrality) << "%; " << fmt(dt)
	         << " s";
	return o;
}

// 9. Optimizer recovers the uniform-flux optimum.
Outcome criterion9()
{
	Outcome o;
	double worst = 0.0;
	int max_it = 0;
	bool monotone = true;
	for (int n : {8, 16})
		for (std::uint64_t seed : {901u, 902u, 903u}) {
			auto m = share(torus(2, n, two_pi));
			const double oracle = two_pi / m->total_measure(2);
			OptimizerConfig cfg;
			cfg.start_amplitude = 0.1;
			cfg.seed = seed;
			try {
				auto est = minimize_curvature(sector_start(m, Sector{1, {1.0}}, cfg), cfg);
				worst = std::max(worst, std::abs(est.sup_norm / oracle - 1.0));
				max_it = std::max(max_it, est.iterations);
				for (std::size_t i = 1; i < est.trace.size(); ++i)
					monotone = monotone && est.trace[i] <= est.trace[i - 1];
				o.require(est.sector_end.count("c1") && std::lround(est.sector_end.at("c1")) == 1, "sector preserved");
			} catch (const Error &e) {
				o.require(false, std::string("optimizer error ") + e.what());
			}
		}
	o.require(worst <= 0.01, "within 1% of 2 pi / A");
	o.require(max_it <= 5000, "iteration budget");
	o.require(monotone, "monotone objective");
	o.detail << "max |sup / (2 pi / A) - 1| = " << fmt(worst) << ", max iterations " << max_it << ", no sector escapes";
	return o;
}

// 10. Circle cuts with loop holonomy never get certificates.
Outcome criterion10()
{
	Outcome o;
	std::mt19937_64 rng(1010);
	std::vector<std::pair<Mesh, Mesh>> sums{{torus(2, 8, two_pi), torus(2, 8, two_pi)},
	                                        {cubed_sphere(4, 1.0), torus(2, 8, two_pi)},
	                                        {cubed_sphere(4, 1.0), cubed_sphere(4, 1.0)}};
	int tested = 0, obstructed = 0;
	for (auto &[a, b] : sums) {
		auto cs = connected_sum(a, b, 0, 0);
		auto m = share(cs.surgery.mesh);
		std::vector<Bundle> corpus;
		for (int k : {1, 2, -1})
			corpus.push_back(monopole_bundle(m, double(k)));
		for (int rank : {1, 2})
			for (double amp : {0.02, 0.1})
				corpus.push_back(gauge(perturb(trivial_bundle(m, rank), amp, rng()), random_gauge(m, rank, rng)));
		for (const auto &bd : corpus) {
			if (dist_identity(cut_holonomy(bd)) <= 1e-9)
				continue;
			++tested;
			auto out = transplant(bd, cs.surgery, cs.plan, 0.5);
			if (auto *x = std::get_if<Obstruction>(&out))
				if (x->kind == ObstructionKind::not_simply_connected || x->kind == ObstructionKind::holonomy)
					++obstructed;
		}
	}
	o.require(tested > 0, "corpus has nontrivial holonomy");
	o.require(obstructed == tested, "obstruction for every transplant");
	o.detail << obstructed << "/" << tested << " transplants obstructed";
	return o;
}

} // namespace

int main()
{
	std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4, criterion5,
	                                               criterion6, criterion7, criterion8, criterion9, criterion10};
	int failures = 0;
	for (std::size_t i = 0; i < criteria.size(); ++i) {
		auto t0 = Clock::now();
		Outcome o;
		try {
			o = criteria[i]();
		} catch (const std::exception &e) {
			o.pass = false;
			o.detail << "exception: " << e.what();
		}
		failures += o.pass ? 0 : 1;
		std::cout << "[criterion " << i + 1 << "] " << (o.pass ? "PASS" : "FAIL") << "  " << o.detail.str() << " ("
		          << fmt(seconds_since(t0)) << " s)" << std::endl;
	}
	return failures == 0 ? 0 : 1;
}
