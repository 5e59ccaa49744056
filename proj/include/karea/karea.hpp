#pragma once

// K-area lower bounds: minimize the curvature sup norm over edge unitaries
// inside a fixed Chern sector. The sup is smoothed by a weighted s-norm
// (weights area / smallest area, so the minimiser on a surface has constant
// curvature); the reported bound always uses the exact sup.

#include "karea/chern.hpp"

#include <Eigen/Eigenvalues>

namespace karea {

struct OptimizerConfig {
	double s = 8.0;                // smoothing exponent
	double step = 0.05;            // initial largest edge rotation per step (radians)
	double growth = 1.25;          // step multiplier after an accepted step
	int max_iters = 5000;
	double guard_tol = 1e-6;       // allowed drift of the Chern totals
	std::uint64_t seed = 0;        // seeds perturbed sector starts
	double min_step = 1e-12;
	double start_amplitude = 0.0;  // perturbation applied to sector starts

	void validate() const
	{
		require(s >= 2.0, ErrorKind::config, "smoothing exponent must be at least 2");
		require(step > 0.0 && growth >= 1.0 && min_step > 0.0, ErrorKind::config, "optimizer steps must be positive");
		require(max_iters >= 0, ErrorKind::config, "iteration budget must be non-negative");
		require(guard_tol > 0.0, ErrorKind::config, "sector guard tolerance must be positive");
		require(start_amplitude >= 0.0, ErrorKind::config, "start amplitude must be non-negative");
	}
};

struct KareaEstimate {
	double lower_bound = 0.0; // 1 / sup_norm at the returned bundle
	double sup_norm = 0.0;
	Bundle optimum;
	std::vector<double> trace;     // smoothed objective, start then each accepted step
	std::vector<double> sup_trace; // exact sup norm alongside `trace`
	std::map<std::string, double> sector_start, sector_end;
	std::map<std::string, long> sector;
	int iterations = 0, accepted = 0, rejected = 0, guard_trips = 0;
	std::string stop_reason;
};

namespace detail {

struct CurvatureEval {
	bool ok = false;
	double objective = 0.0, sup = 0.0;
	std::vector<Mat> logs; // per plaquette
	std::map<std::string, double> totals;
};

inline std::vector<double> area_weights(const Mesh &m)
{
	double amin = std::numeric_limits<double>::infinity();
	for (int p = 0; p < m.num_plaquettes(); ++p)
		amin = std::min(amin, m.plaquette_area(p));
	std::vector<double> w(m.num_plaquettes());
	for (int p = 0; p < m.num_plaquettes(); ++p)
		w[p] = m.plaquette_area(p) / amin;
	return w;
}

/// |eigenvalues| of the field strength of each plaquette.
inline Eigen::VectorXd field_magnitudes(const Mat &log, double area)
{
	if (log.rows() == 1)
		return Eigen::VectorXd::Constant(1, std::abs(log(0, 0).imag()) / area);
	return normal_eigenvalues(log).cwiseAbs() / area;
}

inline CurvatureEval evaluate(const Bundle &b, const std::vector<double> &w, double s, bool totals)
{
	const Mesh &m = *b.base;
	CurvatureEval ev;
	const int np = m.num_plaquettes();
	ev.logs.resize(np);
	std::vector<Eigen::VectorXd> mags(np);
	std::atomic<bool> cut{false};
	parallel_for(np, [&](int p) {
		try {
			ev.logs[p] = log_unitary(b.holonomy(p), p);
			mags[p] = field_magnitudes(ev.logs[p], m.plaquette_area(p));
		} catch (const BranchCutError &) {
			cut = true;
		}
	});
	if (cut)
		return ev;
	for (auto &x : mags)
		ev.sup = std::max(ev.sup, x.maxCoeff());
	if (ev.sup > 0.0) {
		CompensatedSum acc;
		for (int p = 0; p < np; ++p)
			for (double x : mags[p])
				acc.add(w[p] * std::pow(x / ev.sup, s));
		ev.objective = ev.sup * std::pow(acc.value(), 1.0 / s);
	}
	if (totals) {
		if (m.dim == 2) {
			CompensatedSum c1;
			for (const auto &l : ev.logs)
				c1.add(l.trace().imag() / two_pi);
			ev.totals["c1"] = c1.value();
		} else if (m.dim == 4) {
			try {
				auto rep = chern_densities(b);
				for (const auto &k : chern_basis(4))
					ev.totals[k] = rep.totals[k];
			} catch (const BranchCutError &) {
				return ev;
			}
		}
	}
	ev.ok = true;
	return ev;
}

/// Gradient of the smoothed objective in the Lie algebra of each edge, for
/// left multiplication U_e -> exp(X_e) U_e, to first order in the plaquette
/// logs.
inline std::vector<Mat> gradient(const Bundle &b, const CurvatureEval &ev, const std::vector<double> &w, double s)
{
	const Mesh &m = *b.base;
	const int np = m.num_plaquettes(), r = b.rank;
	std::vector<std::array<Mat, 4>> part(np);
	parallel_for(np, [&](int p) {
		const double a = m.plaquette_area(p);
		// dPhi = tr(G dTheta) with log H = i Theta
		Mat g;
		if (r == 1) {
			double th = ev.logs[p](0, 0).imag();
			double x = std::abs(th) / (a * ev.objective);
			g = Mat::Constant(1, 1, w[p] * std::pow(x, s - 1.0) * (th > 0 ? 1.0 : th < 0 ? -1.0 : 0.0) / a);
		} else {
			Eigen::SelfAdjointEigenSolver<Mat> es(herm_part(cplx(0.0, -1.0) * ev.logs[p]));
			Eigen::VectorXd d(r);
			for (int i = 0; i < r; ++i) {
				double th = es.eigenvalues()(i);
				double x = std::abs(th) / (a * ev.objective);
				d(i) = w[p] * std::pow(x, s - 1.0) * (th > 0 ? 1.0 : th < 0 ? -1.0 : 0.0) / a;
			}
			g = es.eigenvectors() * d.asDiagonal() * es.eigenvectors().adjoint();
		}
		const auto &loop = m.plaquette_loop(p);
		// left[k] = U_3 ... U_{k+1}
		std::array<Mat, 4> left;
		left[3] = identity(r);
		for (int k = 2; k >= 0; --k)
			left[k] = left[k + 1] * b.along(loop[k + 1]);
		for (int k = 0; k < 4; ++k) {
			Mat c = loop[k].forward ? left[k] : Mat(left[k] * b.along(loop[k]));
			Mat y = cplx(0.0, 1.0) * (c.adjoint() * g * c);
			part[p][k] = loop[k].forward ? y : Mat(-y);
		}
	});
	std::vector<Mat> grad(m.num_edges(), Mat::Zero(r, r));
	for (int p = 0; p < np; ++p) {
		const auto &loop = m.plaquette_loop(p);
		for (int k = 0; k < 4; ++k)
			grad[loop[k].edge] += part[p][k];
	}
	for (auto &x : grad)
		x = antiherm_part(x);
	return grad;
}

} // namespace detail

/// Chern totals rounded to integers: the sector of a bundle.
inline std::map<std::string, long> chern_sector(const std::map<std::string, double> &totals)
{
	std::map<std::string, long> out;
	for (auto &[k, v] : totals)
		out[k] = std::lround(v);
	return out;
}

inline KareaEstimate minimize_curvature(const Bundle &start, const OptimizerConfig &cfg)
{
	cfg.validate();
	const Mesh &m = *start.base;
	require(m.dim == 2 || m.dim == 4, ErrorKind::unsupported, "curvature minimisation needs a 2D or 4D mesh");
	auto adm = in_k_cross(start, cfg.guard_tol);
	require(adm.admissible, ErrorKind::precondition, "start bundle is not admissible (flat ends and a nonzero Chern number)");
	const auto w = detail::area_weights(m);
	const double s = cfg.s;

	KareaEstimate est;
	Bundle cur = start;
	auto ev = detail::evaluate(cur, w, s, true);
	require(ev.ok, ErrorKind::branch_cut, "start bundle has a plaquette on the branch cut");
	est.sector_start = ev.totals;
	est.sector = chern_sector(ev.totals);
	auto in_sector = [&](const detail::CurvatureEval &e) {
		if (!e.ok)
			return false;
		for (auto &[k, n] : est.sector)
			if (std::abs(e.totals.at(k) - static_cast<double>(n)) > cfg.guard_tol)
				return false;
		return true;
	};
	est.trace.push_back(ev.objective);
	est.sup_trace.push_back(ev.sup);
	Bundle best = cur;
	double best_sup = ev.sup;
	double tau = cfg.step;
	est.stop_reason = "max_iters";
	while (est.iterations < cfg.max_iters) {
		if (ev.objective == 0.0) {
			est.stop_reason = "flat";
			break;
		}
		++est.iterations;
		auto grad = detail::gradient(cur, ev, w, s);
		double gmax = 0.0;
		for (const auto &g : grad)
			gmax = std::max(gmax, norm_normal(g));
		if (!(gmax > 0.0) || !std::isfinite(gmax)) {
			est.stop_reason = "stationary";
			break;
		}
		bool accepted = false, guard_only = true;
		while (tau >= cfg.min_step) {
			Bundle trial = cur;
			const double scale = -tau / gmax;
			parallel_for(m.num_edges(), [&](int e) { trial.transport[e] = exp_antiherm(grad[e] * scale) * cur.transport[e]; });
			auto te = detail::evaluate(trial, w, s, true);
			if (!in_sector(te)) {
				++est.guard_trips;
				tau *= 0.5;
				continue;
			}
			if (te.objective > ev.objective) {
				++est.rejected;
				guard_only = false;
				tau *= 0.5;
				continue;
			}
			cur = std::move(trial);
			ev = std::move(te);
			accepted = true;
			break;
		}
		if (!accepted) {
			if (guard_only)
				fail(ErrorKind::sector_escape, "every step halving left the Chern sector");
			est.stop_reason = "min_step";
			break;
		}
		++est.accepted;
		est.trace.push_back(ev.objective);
		est.sup_trace.push_back(ev.sup);
		if (ev.sup < best_sup) {
			best_sup = ev.sup;
			best = cur;
		}
		tau *= cfg.growth;
	}
	est.optimum = std::move(best);
	est.sup_norm = curvature(est.optimum).sup_norm;
	est.lower_bound = 1.0 / est.sup_norm;
	est.sector_end = detail::evaluate(est.optimum, w, s, true).totals;
	return est;
}

/// A topological sector to search: rank and one flux per 2D factor. The start
/// bundle is the monopole of those fluxes plus a trivial summand of rank - 1.
struct Sector {
	int rank = 1;
	std::vector<double> fluxes;
	std::string str() const
	{
		std::string f;
		for (double x : fluxes)
			f += (f.empty() ? "" : ",") + std::to_string(std::lround(x));
		return "rank" + std::to_string(rank) + "(" + f + ")";
	}
};

inline Bundle sector_start(std::shared_ptr<const Mesh> m, const Sector &sec, const OptimizerConfig &cfg)
{
	require(sec.rank >= 1, ErrorKind::config, "sector rank must be positive");
	Bundle b = monopole_bundle(m, sec.fluxes);
	if (sec.rank > 1)
		b = direct_sum(b, trivial_bundle(m, sec.rank - 1));
	if (cfg.start_amplitude > 0.0)
		b = perturb(b, cfg.start_amplitude, cfg.seed);
	return b;
}

struct LowerBoundReport {
	KareaEstimate best;
	Sector best_sector;
	std::vector<std::pair<Sector, double>> bounds; // per sector that ran
	std::vector<std::pair<Sector, std::string>> failures;
};

inline LowerBoundReport karea_lower_bound(std::shared_ptr<const Mesh> m, const std::vector<Sector> &sectors,
                                          const OptimizerConfig &cfg)
{
	require(!sectors.empty(), ErrorKind::config, "no sectors to search");
	LowerBoundReport rep;
	bool any = false;
	for (const auto &sec : sectors) {
		try {
			auto est = minimize_curvature(sector_start(m, sec, cfg), cfg);
			rep.bounds.push_back({sec, est.lower_bound});
			if (!any || est.lower_bound > rep.best.lower_bound) {
				rep.best = std::move(est);
				rep.best_sector = sec;
				any = true;
			}
		} catch (const Error &e) {
			rep.failures.push_back({sec, e.what()});
		}
	}
	if (!any) {
		std::string why;
		for (auto &[sec, msg] : rep.failures)
			why += "\n  " + sec.str() + ": " + msg;
		fail(ErrorKind::aggregate, "every sector failed:" + why);
	}
	return rep;
}

struct ScalingReport {
	double c = 1.0;
	double base_bound = 0.0, scaled_bound = 0.0, ratio = 0.0;
	double relative_error = 0.0; // |ratio / c^2 - 1|
	bool pass = false;
};

inline ScalingReport scaling_experiment(std::shared_ptr<const Mesh> m, double c, const Sector &sec, const OptimizerConfig &cfg,
                                        double tol = 1e-3)
{
	ScalingReport r;
	r.c = c;
	auto scaled = std::make_shared<const Mesh>(scale_metric(*m, c));
	r.base_bound = karea_lower_bound(m, {sec}, cfg).best.lower_bound;
	r.scaled_bound = karea_lower_bound(scaled, {sec}, cfg).best.lower_bound;
	r.ratio = r.scaled_bound / r.base_bound;
	r.relative_error = std::abs(r.ratio / (c * c) - 1.0);
	r.pass = r.relative_error <= tol;
	return r;
}

struct CoveringReport {
	std::vector<int> factors;
	int sheets = 1;
	double base_bound = 0.0, total_bound = 0.0, ratio = 0.0;
	double relative_error = 0.0; // |ratio / sheets - 1|
	double total_sup = 0.0, image_sup = 0.0; // ||R^E|| on the total optimum and of its direct image
	bool monotone = false;
	bool pass = false;
};

inline CoveringReport covering_experiment(std::shared_ptr<const Mesh> m, const std::vector<int> &factors, const Sector &sec,
                                          const OptimizerConfig &cfg, double tol = 1e-2)
{
	CoveringReport r;
	r.factors = factors;
	CoveringMap cov = covering(m, factors);
	r.sheets = cov.sheets;
	r.base_bound = karea_lower_bound(m, {sec}, cfg).best.lower_bound;
	auto tot = karea_lower_bound(cov.total, {sec}, cfg);
	r.total_bound = tot.best.lower_bound;
	r.ratio = r.total_bound / r.base_bound;
	r.relative_error = std::abs(r.ratio / r.sheets - 1.0);
	r.total_sup = tot.best.sup_norm;
	r.image_sup = curvature(direct_image(tot.best.optimum, cov)).sup_norm;
	r.monotone = r.image_sup <= r.total_sup + 1e-12;
	r.pass = r.relative_error <= tol && r.monotone;
	return r;
}

} // namespace karea
