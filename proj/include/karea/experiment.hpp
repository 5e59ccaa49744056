#pragma once

// Experiment specs and reports. A report lists every measured number as a
// check carrying its bound, tolerance and pass flag; reports contain no
// timings so repeated runs are byte-identical.

#include "karea/io.hpp"
#include "karea/karea.hpp"
#include "karea/surgery.hpp"

#include <filesystem>

namespace karea {

/// Exit-code contract of the command-line tool.
enum ExitCode { exit_pass = 0, exit_assertion = 1, exit_input = 2, exit_numeric = 3 };

inline int exit_code_for(ErrorKind k)
{
	switch (k) {
	case ErrorKind::branch_cut:
	case ErrorKind::sector_escape:
	case ErrorKind::aggregate: return exit_numeric;
	default: return exit_input;
	}
}

/// Default output directory: KAREA_OUT_DIR if set, else the working directory.
inline std::string default_out_dir()
{
	const char *env = std::getenv("KAREA_OUT_DIR");
	return env && *env ? std::string(env) : std::string(".");
}

/// Mesh from a generator description {"generator": name, ...} or {"file": path}.
inline Mesh mesh_from_spec(const json &j)
{
	try {
		if (j.contains("file"))
			return read_mesh(j["file"].get<std::string>());
		const std::string g = j.at("generator").get<std::string>();
		auto num = [&](const char *k, double d) { return j.value(k, d); };
		auto integer = [&](const char *k, int d) { return j.value(k, d); };
		if (g == "torus") {
			int d = integer("dim", 2);
			return torus(d, integer("n", 8), num("side", two_pi));
		}
		if (g == "cubed_sphere")
			return cubed_sphere(integer("n", 8), num("radius", 1.0));
		if (g == "cylinder") {
			int n = integer("n", 8);
			require(n >= min_periodic_resolution, ErrorKind::config, "cylinder circle resolution below minimum");
			return cylinder(circle(n, num("circumference", 1.0)), integer("levels", 4), num("a", 0.0), num("b", 1.0));
		}
		if (g == "sphere_x_disk")
			return handle_region(integer("p", 1), integer("q", 1), integer("n", 4), num("edge", 1.0));
		if (g == "disk_x_sphere")
			return handle(integer("p", 1), integer("q", 1), integer("n", 4), num("edge", 1.0));
		if (g == "torus_x_sphere")
			return torus_x_sphere(integer("n", 4), num("side", two_pi), num("radius", 1.0));
		if (g == "capped_cylinder")
			return capped_cylinder(integer("n", 2), integer("levels", 8), num("edge", 1.0));
		if (g == "disk")
			return disk(integer("n", 4), num("edge", 1.0));
		if (g == "cube_sphere")
			return cube_sphere(integer("dim", 3), integer("n", 2), num("edge", 1.0));
		fail(ErrorKind::config, "unsupported generator '" + g + "'");
	} catch (const json::exception &e) {
		fail(ErrorKind::config, std::string("bad mesh spec: ") + e.what());
	}
}

inline Sector sector_from_json(const json &j)
{
	Sector s;
	s.rank = j.value("rank", 1);
	s.fluxes = j.value("fluxes", std::vector<double>{1.0});
	return s;
}

/// Parses "rank:flux,flux" (rank optional).
inline Sector sector_from_string(const std::string &text)
{
	Sector s;
	std::string f = text;
	auto colon = text.find(':');
	try {
		if (colon != std::string::npos) {
			s.rank = std::stoi(text.substr(0, colon));
			f = text.substr(colon + 1);
		}
		s.fluxes.clear();
		std::stringstream ss(f);
		std::string item;
		while (std::getline(ss, item, ','))
			s.fluxes.push_back(std::stod(item));
	} catch (const std::exception &) {
		fail(ErrorKind::config, "bad sector '" + text + "', expected rank:flux[,flux]");
	}
	require(!s.fluxes.empty(), ErrorKind::config, "sector needs at least one flux");
	return s;
}

inline OptimizerConfig optimizer_from_json(const json &j, std::uint64_t seed)
{
	OptimizerConfig c;
	c.s = j.value("s", c.s);
	c.step = j.value("step", c.step);
	c.growth = j.value("growth", c.growth);
	c.max_iters = j.value("max_iters", c.max_iters);
	c.guard_tol = j.value("guard_tol", c.guard_tol);
	c.min_step = j.value("min_step", c.min_step);
	c.start_amplitude = j.value("start_amplitude", c.start_amplitude);
	c.seed = j.value("seed", seed);
	c.validate();
	return c;
}

/// A surgery rebuilt from its description.
struct SurgerySetup {
	SurgeryPlan plan;
	SurgeryResult result;
	std::optional<ConnectedSum> sum;
	std::shared_ptr<const Mesh> mesh;
	std::shared_ptr<const Mesh> first_summand; // connected sums only
};

/// {"kind": "band", "torus": {...}, "origin", "width", "collar_levels"}
/// {"kind": "sum", "a": {...}, "b": {...}, "cell1", "cell2", "collar_levels"}
/// {"kind": "cells", "mesh": {...}, "cells": [c1, c2], "collar_levels"}
inline SurgerySetup build_surgery(const json &j)
{
	try {
		SurgerySetup s;
		const std::string kind = j.at("kind").get<std::string>();
		const int levels = j.value("collar_levels", 2);
		if (kind == "band") {
			auto t = std::make_shared<const Mesh>(mesh_from_spec(j.at("torus")));
			s.plan = band_plan(t, j.value("origin", 0), j.value("width", 2), levels);
			s.result = surgery(s.plan);
		} else if (kind == "sum") {
			Mesh a = mesh_from_spec(j.at("a"));
			Mesh b = mesh_from_spec(j.at("b"));
			s.sum = connected_sum(a, b, j.value("cell1", 0), j.value("cell2", 0), levels);
			s.plan = s.sum->plan;
			s.result = s.sum->surgery;
			s.first_summand = std::make_shared<const Mesh>(std::move(a));
		} else if (kind == "cells") {
			auto m = std::make_shared<const Mesh>(mesh_from_spec(j.at("mesh")));
			auto cells = j.at("cells").get<std::vector<int>>();
			require(cells.size() == 2, ErrorKind::config, "cell surgery needs two cells");
			s.plan = cell_pair_plan(m, cells[0], cells[1], levels);
			s.result = surgery(s.plan);
		} else {
			fail(ErrorKind::config, "unknown surgery kind '" + kind + "'");
		}
		s.mesh = std::make_shared<const Mesh>(s.result.mesh);
		return s;
	} catch (const json::exception &e) {
		fail(ErrorKind::config, std::string("bad surgery plan: ") + e.what());
	}
}

/// Report under construction.
class Report {
  public:
	explicit Report(std::string name, std::uint64_t seed)
	{
		j_["software"] = {{"name", "karea"}, {"version", software_version}};
		j_["experiment"] = std::move(name);
		j_["seed"] = seed;
		j_["meshes"] = json::object();
		j_["checks"] = json::array();
	}
	void mesh(const std::string &role, const Mesh &m) { j_["meshes"][role] = hex_hash(m.combinatorial_hash()); }
	void param(const std::string &key, json v) { j_["params"][key] = std::move(v); }

	/// relation: "<=", ">=", "==" (|value - bound| <= tol) or "true"
	bool check(const std::string &name, double value, const std::string &relation, double bound, double tol)
	{
		require(tol >= 0.0 && std::isfinite(tol), ErrorKind::config, "check '" + name + "' has an invalid tolerance");
		bool pass = false;
		if (relation == "<=")
			pass = value <= bound + tol;
		else if (relation == ">=")
			pass = value >= bound - tol;
		else if (relation == "==")
			pass = std::abs(value - bound) <= tol;
		else
			fail(ErrorKind::config, "unknown check relation '" + relation + "'");
		json c;
		c["name"] = name;
		c["value"] = finite_or_null(value);
		c["relation"] = relation;
		c["bound"] = finite_or_null(bound);
		c["tolerance"] = tol;
		c["pass"] = pass;
		j_["checks"].push_back(std::move(c));
		if (!pass && first_failure_.empty())
			first_failure_ = name;
		return pass;
	}
	bool passed() const { return first_failure_.empty(); }
	const std::string &first_failure() const { return first_failure_; }
	json finish()
	{
		j_["pass"] = passed();
		j_["first_failure"] = first_failure_.empty() ? json(nullptr) : json(first_failure_);
		return j_;
	}

  private:
	static json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }
	json j_;
	std::string first_failure_;
};

/// CSV projection of a report's checks.
inline std::string checks_csv(const json &report)
{
	std::ostringstream out;
	out << "name,value,relation,bound,tolerance,pass\n";
	auto num = [](const json &v) { return v.is_null() ? std::string("") : v.dump(); };
	for (const auto &c : report.at("checks"))
		out << c["name"].get<std::string>() << ',' << num(c["value"]) << ',' << c["relation"].get<std::string>() << ','
		    << num(c["bound"]) << ',' << c["tolerance"].dump() << ',' << (c["pass"].get<bool>() ? "true" : "false") << '\n';
	return out.str();
}

namespace detail {

inline json run_scaling(const json &p, std::uint64_t seed, Report &r)
{
	auto m = std::make_shared<const Mesh>(mesh_from_spec(p.at("mesh")));
	r.mesh("mesh", *m);
	const double c = p.value("c", 2.0);
	auto sec = sector_from_json(p.value("sector", json::object()));
	auto cfg = optimizer_from_json(p.value("optimizer", json::object()), seed);
	auto rep = scaling_experiment(m, c, sec, cfg, p.value("tolerance", 1e-3));
	// the spec may state the expected ratio; it defaults to c^2
	const double expected = p.value("expected_ratio", c * c);
	r.param("expected_ratio", expected);
	r.check("base_bound_positive", rep.base_bound, ">=", 0.0, 0.0);
	r.check("bound_ratio_over_expected", rep.ratio / expected, "==", 1.0, p.value("tolerance", 1e-3));
	return json::object();
}

inline json run_covering(const json &p, std::uint64_t seed, Report &r)
{
	auto m = std::make_shared<const Mesh>(mesh_from_spec(p.at("mesh")));
	r.mesh("base", *m);
	auto factors = p.value("factors", std::vector<int>{2, 2});
	auto sec = sector_from_json(p.value("sector", json::object()));
	auto cfg = optimizer_from_json(p.value("optimizer", json::object()), seed);
	auto rep = covering_experiment(m, factors, sec, cfg, p.value("tolerance", 1e-2));
	r.check("bound_ratio_over_sheets", rep.ratio / rep.sheets, "==", 1.0, p.value("tolerance", 1e-2));
	r.check("direct_image_sup_minus_total_sup", rep.image_sup - rep.total_sup, "<=", 0.0, 1e-12);
	// direct-image monotonicity on random perturbed bundles over the total space
	CoveringMap cov = covering(m, factors);
	std::mt19937_64 rng(seed);
	double worst = -std::numeric_limits<double>::infinity();
	const int n = p.value("random_inputs", 20);
	for (int i = 0; i < n; ++i) {
		Bundle e = perturb(monopole_bundle(cov.total, sec.fluxes), p.value("amplitude", 0.05), rng());
		worst = std::max(worst, curvature(direct_image(e, cov)).sup_norm - curvature(e).sup_norm);
	}
	if (n > 0)
		r.check("random_direct_image_excess", worst, "<=", 0.0, 1e-12);
	return json::object();
}

inline std::vector<Bundle> bookkeeping_corpus(const SurgerySetup &s, const json &p, std::uint64_t seed)
{
	std::vector<Bundle> corpus;
	std::mt19937_64 rng(seed);
	const int rank = p.value("rank", 1);
	for (double a : p.value("amplitudes", std::vector<double>{0.005, 0.01, 0.02}))
		for (int i = 0; i < p.value("per_amplitude", 3); ++i) {
			Bundle b = perturb(trivial_bundle(s.mesh, rank), a, rng());
			corpus.push_back(gauge(b, random_gauge(s.mesh, rank, rng)));
		}
	return corpus;
}

inline json run_surgery_bookkeeping(const json &p, std::uint64_t seed, Report &r)
{
	SurgerySetup s = build_surgery(p.at("plan"));
	r.mesh("surgered", *s.mesh);
	const double eps0 = p.value("eps0", 0.5);
	const double tol = p.value("tolerance", 1e-6);
	double worst = 0.0;
	int obstructions = 0;
	std::vector<Bundle> corpus;
	if (s.sum && p.contains("summand_fluxes")) {
		auto m1 = s.first_summand;
		corpus.push_back(collapse_map_pullback(monopole_bundle(m1, p["summand_fluxes"].get<std::vector<double>>()), *s.sum));
	} else {
		corpus = bookkeeping_corpus(s, p, seed);
	}
	for (const Bundle &b : corpus) {
		auto out = transplant(b, s.result, s.plan, eps0);
		if (auto *t = std::get_if<TransplantResult>(&out))
			worst = std::max(worst, t->identity_residual);
		else
			++obstructions;
	}
	r.check("transplant_obstructions", obstructions, "<=", 0.0, 0.0);
	r.check("max_identity_residual", worst, "<=", tol, 0.0);
	if (s.mesh->dim == 2) {
		auto scan = threshold_scan(surface_corpus(s.mesh, p.value("scan_fluxes", std::vector<int>{-1, 0, 1, 2}),
		                                          p.value("scan_amplitudes", std::vector<double>{0.0, 0.05, 0.2}), seed + 1));
		const double oracle = two_pi / s.mesh->total_measure(2);
		r.check("delta_star_over_flux_bound", scan.delta_star / oracle, ">=", 1.0, 1e-9);
	}
	return json::object();
}

inline json run_trivialize_threshold(const json &p, std::uint64_t seed, Report &r)
{
	auto m = std::make_shared<const Mesh>(mesh_from_spec(p.at("mesh")));
	r.mesh("mesh", *m);
	const int rank = p.value("rank", 1);
	auto cal = calibrate_constant(m, rank, seed, p.value("calibration_inputs", 20));
	r.check("calibrated_constant_positive", cal.constant, ">=", 0.0, 0.0);
	std::mt19937_64 rng(seed + 1);
	double lo = std::numeric_limits<double>::infinity(), hi = 0.0, worst = 0.0;
	int failures = 0;
	const auto deltas = p.value("deltas", std::vector<double>{0.005, 0.01, 0.02});
	const int per = p.value("per_delta", 5);
	for (double d : deltas)
		for (int i = 0; i < per; ++i) {
			Bundle b = perturb_to_curvature(trivial_bundle(m, rank), d, rng());
			b = gauge(b, random_gauge(m, rank, rng));
			auto res = trivialize(b, cal.constant * d * (1.0 + 1e-9));
			if (auto *c = std::get_if<FrameCertificate>(&res)) {
				lo = std::min(lo, c->constant_estimate);
				hi = std::max(hi, c->constant_estimate);
				worst = std::max(worst, c->residual / (cal.constant * c->input_norm));
			} else {
				++failures;
			}
		}
	r.check("trivialize_failures", failures, "<=", 0.0, 0.0);
	r.check("residual_over_calibrated_bound", worst, "<=", 1.0, 1e-9);
	r.check("constant_spread", hi / lo, "<=", p.value("max_spread", 10.0), 0.0);
	return json::object();
}

/// Capped long-neck surface versus the bare summand: the neck changes area
/// but not the sector structure, so both scans obey the flux bound.
inline json run_cylinder_cap(const json &p, std::uint64_t seed, Report &r)
{
	Mesh base = mesh_from_spec(p.value("mesh", json{{"generator", "torus"}, {"n", 8}, {"side", two_pi}}));
	Mesh cap = capped_cylinder(p.value("neck_n", 1), p.value("neck_levels", 8), p.value("neck_edge", base.edge_length(0)));
	auto cs = connected_sum(base, cap, 0, 0, p.value("collar_levels", 2));
	auto m0 = std::make_shared<const Mesh>(base);
	auto ml = std::make_shared<const Mesh>(cs.surgery.mesh);
	r.mesh("compact", *m0);
	r.mesh("long_neck", *ml);
	const auto fluxes = p.value("fluxes", std::vector<int>{-1, 0, 1});
	const auto amps = p.value("amplitudes", std::vector<double>{0.0, 0.02, 0.1});
	auto cfg = optimizer_from_json(p.value("optimizer", json::object()), seed);
	for (auto [name, m] : {std::pair{"compact", m0}, std::pair{"long_neck", ml}}) {
		auto scan = threshold_scan(surface_corpus(m, fluxes, amps, seed));
		const double oracle = two_pi / m->total_measure(2);
		r.check(std::string(name) + "_delta_star_over_flux_bound", scan.delta_star / oracle, ">=", 1.0, 1e-9);
		auto est = karea_lower_bound(m, {Sector{1, {1.0}}}, cfg);
		r.check(std::string(name) + "_bound_over_area_bound", est.best.lower_bound * oracle, "<=", 1.0, 1e-6);
	}
	return json::object();
}

} // namespace detail

/// Runs an experiment spec; returns the report. Input problems throw Error.
inline json run_experiment(const json &spec)
{
	std::string name, kind;
	std::uint64_t seed = 0;
	json params;
	try {
		name = spec.at("name").get<std::string>();
		kind = spec.at("experiment").get<std::string>();
		seed = spec.value("seed", std::uint64_t{0});
		params = spec.value("params", json::object());
	} catch (const json::exception &e) {
		fail(ErrorKind::io, std::string("experiment spec schema: ") + e.what());
	}
	Report r(name, seed);
	r.param("experiment", kind);
	r.param("spec", params);
	if (kind == "scaling")
		detail::run_scaling(params, seed, r);
	else if (kind == "torus-covering")
		detail::run_covering(params, seed, r);
	else if (kind == "surgery-bookkeeping")
		detail::run_surgery_bookkeeping(params, seed, r);
	else if (kind == "trivialize-threshold")
		detail::run_trivialize_threshold(params, seed, r);
	else if (kind == "cylinder-cap")
		detail::run_cylinder_cap(params, seed, r);
	else
		fail(ErrorKind::io, "unknown experiment '" + kind + "'");
	return r.finish();
}

} // namespace karea
