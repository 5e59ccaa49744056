// Command-line entry point. Every command reads and writes the JSON formats of
// io.hpp; results go to stdout unless -o names a file. Relative output paths
// land in --out (default: $KAREA_OUT_DIR or the working directory).

#include "karea/experiment.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace fs = std::filesystem;
using namespace karea;

namespace {

struct Globals {
	int threads = 1;
	std::uint64_t seed = 0;
	std::string out_dir = default_out_dir();
};

std::string resolve(const Globals &g, const std::string &path)
{
	fs::path p(path);
	if (p.is_absolute())
		return path;
	fs::create_directories(g.out_dir);
	return (fs::path(g.out_dir) / p).string();
}

void emit(const Globals &g, const std::string &output, const json &j)
{
	if (output.empty() || output == "-")
		std::cout << j.dump(2) << '\n';
	else
		write_json(resolve(g, output), j);
}

void emit_text(const Globals &g, const std::string &output, const std::string &text)
{
	std::string path = resolve(g, output);
	std::ofstream out(path);
	require(out.good(), ErrorKind::io, "cannot write '" + path + "'");
	out << text;
}

std::shared_ptr<const Mesh> load_mesh(const std::string &path) { return std::make_shared<const Mesh>(read_mesh(path)); }

std::vector<int> parse_ints(const std::string &text)
{
	std::vector<int> out;
	std::stringstream ss(text);
	std::string item;
	try {
		while (std::getline(ss, item, ','))
			out.push_back(std::stoi(item));
	} catch (const std::exception &) {
		fail(ErrorKind::config, "expected a comma separated integer list, got '" + text + "'");
	}
	return out;
}

std::vector<double> parse_doubles(const std::string &text)
{
	std::vector<double> out;
	std::stringstream ss(text);
	std::string item;
	try {
		while (std::getline(ss, item, ','))
			out.push_back(std::stod(item));
	} catch (const std::exception &) {
		fail(ErrorKind::config, "expected a comma separated number list, got '" + text + "'");
	}
	return out;
}

json spec_arg(const std::string &text)
{
	if (fs::exists(text))
		return read_json(text);
	try {
		return json::parse(text);
	} catch (const json::exception &e) {
		fail(ErrorKind::io, "'" + text + "' is neither a file nor inline JSON");
	}
}

json obstruction_json(const Obstruction &o)
{
	return {{"result", "obstruction"}, {"kind", to_string(o.kind)}, {"witness", o.witness}, {"cell", o.cell}, {"value", o.value}};
}

json certificate_json(const FrameCertificate &c, bool with_frames)
{
	json j = {{"result", "certificate"},
	          {"residual", c.residual},
	          {"constant_estimate", c.constant_estimate},
	          {"input_norm", c.input_norm},
	          {"relax_sweeps", c.relax_sweeps}};
	if (with_frames) {
		json fr = json::array();
		for (const auto &u : c.gauge.frame) {
			json rows = json::array();
			for (int i = 0; i < u.rows(); ++i) {
				json row = json::array();
				for (int k = 0; k < u.cols(); ++k)
					row.push_back({u(i, k).real(), u(i, k).imag()});
				rows.push_back(std::move(row));
			}
			fr.push_back(std::move(rows));
		}
		j["frames"] = std::move(fr);
	}
	return j;
}

json trace_json(const KareaEstimate &e)
{
	json j;
	j["lower_bound"] = e.lower_bound;
	j["sup_norm"] = e.sup_norm;
	j["iterations"] = e.iterations;
	j["accepted"] = e.accepted;
	j["rejected"] = e.rejected;
	j["guard_trips"] = e.guard_trips;
	j["stop_reason"] = e.stop_reason;
	j["sector_start"] = e.sector_start;
	j["sector_end"] = e.sector_end;
	j["sector"] = e.sector;
	json t = json::array();
	for (std::size_t i = 0; i < e.trace.size(); ++i)
		t.push_back({{"step", i}, {"objective", e.trace[i]}, {"sup_norm", e.sup_trace[i]}});
	j["trace"] = std::move(t);
	return j;
}

std::string trace_csv(const KareaEstimate &e)
{
	std::ostringstream out;
	out.precision(17);
	out << "step,objective,sup_norm\n";
	for (std::size_t i = 0; i < e.trace.size(); ++i)
		out << i << ',' << e.trace[i] << ',' << e.sup_trace[i] << '\n';
	return out.str();
}

OptimizerConfig config_arg(const std::string &path, std::uint64_t seed)
{
	return optimizer_from_json(path.empty() ? json::object() : spec_arg(path), seed);
}

} // namespace

int main(int argc, char **argv)
{
	CLI::App app{"karea: lattice bundles, surgery bookkeeping and K-area lower bounds"};
	app.require_subcommand(1);
	Globals g;
	app.add_option("--threads", g.threads, "Worker cap for data-parallel kernels")->check(CLI::PositiveNumber);
	app.add_option("--seed", g.seed, "Seed for random constructions");
	app.add_option("--out", g.out_dir, "Directory for relative output paths (default $KAREA_OUT_DIR or .)");

	std::function<void()> action;
	std::string output;
	auto out_opt = [&](CLI::App *c) { c->add_option("-o,--output", output, "Output file (default stdout)"); };

	// mesh
	auto *mesh = app.add_subcommand("mesh", "Generate and transform meshes")->require_subcommand(1);
	std::string gen_name, mesh_in, mesh_b, plan_in, factors_s = "2,2";
	int n = 8, dim = 2, levels = 8, p = 1, q = 1, cell1 = 0, cell2 = 0, collar_levels = 2;
	double side = two_pi, radius = 1.0, edge = 1.0, c = 2.0;
	{
		auto *gen = mesh->add_subcommand("gen", "Generate a mesh");
		gen->add_option("generator", gen_name,
		                "torus | cubed_sphere | cylinder | sphere_x_disk | disk_x_sphere | torus_x_sphere | capped_cylinder | disk | "
		                "cube_sphere")
		    ->required();
		gen->add_option("--n", n, "Resolution");
		gen->add_option("--dim", dim, "Dimension (torus, cube_sphere)");
		gen->add_option("--side", side, "Torus side length");
		gen->add_option("--radius", radius, "Sphere radius");
		gen->add_option("--edge", edge, "Edge length");
		gen->add_option("--levels", levels, "Cylinder levels");
		gen->add_option("--p", p, "Sphere dimension of the handle");
		gen->add_option("--q", q, "Disk dimension of the handle");
		out_opt(gen);
		gen->callback([&] {
			action = [&] {
				json spec = {{"generator", gen_name}, {"n", n},         {"dim", dim}, {"side", side}, {"radius", radius},
				             {"edge", edge},          {"levels", levels}, {"p", p},     {"q", q}};
				emit(g, output, mesh_to_json(mesh_from_spec(spec)));
			};
		});

		auto *scale = mesh->add_subcommand("scale", "Scale the metric by c (lengths times c)");
		scale->add_option("--mesh", mesh_in)->required();
		scale->add_option("--c", c)->required();
		out_opt(scale);
		scale->callback([&] { action = [&] { emit(g, output, mesh_to_json(scale_metric(*load_mesh(mesh_in), c))); }; });

		auto *cover = mesh->add_subcommand("cover", "Finite covering of a torus");
		cover->add_option("--mesh", mesh_in)->required();
		cover->add_option("--factors", factors_s, "Comma separated unrolling factors");
		out_opt(cover);
		cover->callback([&] {
			action = [&] {
				CoveringMap cov = covering(load_mesh(mesh_in), parse_ints(factors_s));
				json j = mesh_to_json(*cov.total);
				j["projection"] = cov.projection;
				j["sheets"] = cov.sheets;
				emit(g, output, j);
			};
		});

		auto *sum = mesh->add_subcommand("sum", "Connected sum through a cylinder collar");
		sum->add_option("--a", mesh_in)->required();
		sum->add_option("--b", mesh_b)->required();
		sum->add_option("--cell1", cell1);
		sum->add_option("--cell2", cell2);
		sum->add_option("--collar-levels", collar_levels);
		out_opt(sum);
		sum->callback([&] {
			action = [&] {
				auto cs = connected_sum(*load_mesh(mesh_in), *load_mesh(mesh_b), cell1, cell2, collar_levels);
				emit(g, output, mesh_to_json(cs.surgery.mesh));
			};
		});

		auto *surg = mesh->add_subcommand("surgery", "Surgery from a plan (band, sum or cells)");
		surg->add_option("--plan", plan_in, "Plan file or inline JSON")->required();
		out_opt(surg);
		surg->callback([&] { action = [&] { emit(g, output, mesh_to_json(*build_surgery(spec_arg(plan_in)).mesh)); }; });
	}

	// bundle
	auto *bundle = app.add_subcommand("bundle", "Generate and transform bundles")->require_subcommand(1);
	std::string bundle_in, kind = "trivial", flux_s = "1", mesh_out;
	int rank = 1;
	double amplitude = 0.0;
	bool tree = false;
	{
		auto *gen = bundle->add_subcommand("gen", "Trivial or monopole bundle, optionally perturbed");
		gen->add_option("--mesh", mesh_in)->required();
		gen->add_option("--kind", kind, "trivial | monopole")->check(CLI::IsMember({"trivial", "monopole"}));
		gen->add_option("--rank", rank)->check(CLI::PositiveNumber);
		gen->add_option("--flux", flux_s, "Flux per surface factor, comma separated");
		gen->add_option("--amplitude", amplitude, "Random perturbation amplitude");
		out_opt(gen);
		gen->callback([&] {
			action = [&] {
				auto m = load_mesh(mesh_in);
				Bundle b = trivial_bundle(m, rank);
				if (kind == "monopole") {
					OptimizerConfig cfg;
					cfg.seed = g.seed;
					cfg.start_amplitude = 0.0;
					b = sector_start(m, Sector{rank, parse_doubles(flux_s)}, cfg);
				}
				if (amplitude > 0.0)
					b = perturb(b, amplitude, g.seed);
				emit(g, output, bundle_to_json(b));
			};
		});

		auto *gauge_c = bundle->add_subcommand("gauge", "Apply a random or tree gauge");
		gauge_c->add_option("--mesh", mesh_in)->required();
		gauge_c->add_option("--bundle", bundle_in)->required();
		gauge_c->add_flag("--tree", tree, "Tree gauge instead of a random one");
		out_opt(gauge_c);
		gauge_c->callback([&] {
			action = [&] {
				auto m = load_mesh(mesh_in);
				Bundle b = read_bundle(bundle_in, m);
				if (tree) {
					b = apply_tree_gauge(b, tree_gauge(b));
				} else {
					std::mt19937_64 rng(g.seed);
					b = gauge(b, random_gauge(m, b.rank, rng));
				}
				emit(g, output, bundle_to_json(b));
			};
		});

		auto *curv = bundle->add_subcommand("curvature", "Field strength norms");
		curv->add_option("--mesh", mesh_in)->required();
		curv->add_option("--bundle", bundle_in)->required();
		out_opt(curv);
		curv->callback([&] {
			action = [&] {
				auto m = load_mesh(mesh_in);
				auto r = curvature(read_bundle(bundle_in, m));
				json norms = json::array();
				for (const auto &f : r.field_strength)
					norms.push_back(norm_normal(f));
				emit(g, output, {{"sup_norm", r.sup_norm}, {"argmax", r.argmax}, {"plaquette_norms", norms}});
			};
		});

		auto *pull = bundle->add_subcommand("pullback", "Pullback along a covering projection or a connected-sum collapse");
		pull->add_option("--mesh", mesh_in, "Base of the bundle")->required();
		pull->add_option("--bundle", bundle_in)->required();
		pull->add_option("--factors", factors_s, "Covering factors");
		pull->add_option("--plan", plan_in, "Connected-sum plan; pulls back along the collapse onto its first summand");
		pull->add_option("--mesh-out", mesh_out, "Also write the total mesh");
		out_opt(pull);
		pull->callback([&] {
			action = [&] {
				auto m = load_mesh(mesh_in);
				Bundle b = read_bundle(bundle_in, m);
				Bundle out;
				if (!plan_in.empty()) {
					json plan = spec_arg(plan_in);
					require(plan.value("kind", "") == "sum", ErrorKind::config, "collapse pullback needs a sum plan");
					SurgerySetup s = build_surgery(plan);
					require_same_base(*s.first_summand, *m, "collapse pullback");
					out = collapse_map_pullback(b, *s.sum);
					if (!mesh_out.empty())
						write_json(resolve(g, mesh_out), mesh_to_json(*s.mesh));
				} else {
					CoveringMap cov = covering(m, parse_ints(factors_s));
					out = pullback(b, cov.as_map());
					if (!mesh_out.empty())
						write_json(resolve(g, mesh_out), mesh_to_json(*cov.total));
				}
				emit(g, output, bundle_to_json(out));
			};
		});

		auto *push = bundle->add_subcommand("pushforward", "Direct image along a torus covering");
		push->add_option("--mesh", mesh_in, "Base torus of the covering")->required();
		push->add_option("--bundle", bundle_in, "Bundle over the covering torus")->required();
		push->add_option("--factors", factors_s, "Covering factors");
		out_opt(push);
		push->callback([&] {
			action = [&] {
				CoveringMap cov = covering(load_mesh(mesh_in), parse_ints(factors_s));
				emit(g, output, bundle_to_json(direct_image(read_bundle(bundle_in, cov.total), cov)));
			};
		});
	}

	// chern
	auto *chern = app.add_subcommand("chern", "Chern-Weil integrals")->require_subcommand(1);
	std::string poly = "c1";
	bool densities = false;
	{
		auto *eval = chern->add_subcommand("eval", "Evaluate a Chern polynomial");
		eval->add_option("--mesh", mesh_in)->required();
		eval->add_option("--bundle", bundle_in)->required();
		eval->add_option("--poly", poly, "e.g. c1, c1^2 - 2 c2, 1/2 c1^2");
		eval->add_flag("--densities", densities, "Include per-cell densities");
		out_opt(eval);
		eval->callback([&] {
			action = [&] {
				auto m = load_mesh(mesh_in);
				Bundle b = read_bundle(bundle_in, m);
				auto pp = ChernPolynomial::parse(poly);
				auto rep = chern_densities(b);
				json j;
				j["poly"] = pp.str();
				double v = chern_number(rep, pp);
				j["totals"] = rep.totals;
				j["totals"][pp.str()] = v;
				json res = json::object();
				for (auto &[k, t] : j["totals"].items())
					res[k] = std::abs(t.get<double>() - std::round(t.get<double>()));
				j["residuals"] = res;
				if (densities)
					j["densities"] = rep.densities;
				emit(g, output, j);
			};
		});
	}

	// trivialize
	double eps = 0.1;
	bool frames = false;
	auto *triv = app.add_subcommand("trivialize", "Near-identity global frame or obstruction");
	triv->add_option("--mesh", mesh_in)->required();
	triv->add_option("--bundle", bundle_in)->required();
	triv->add_option("--eps", eps, "Largest allowed ||U - I|| after gauging")->required();
	triv->add_flag("--frames", frames, "Include the frames of a certificate");
	out_opt(triv);
	triv->callback([&] {
		action = [&] {
			auto m = load_mesh(mesh_in);
			auto r = trivialize(read_bundle(bundle_in, m), eps);
			if (auto *o = std::get_if<Obstruction>(&r))
				emit(g, output, obstruction_json(*o));
			else
				emit(g, output, certificate_json(std::get<FrameCertificate>(r), frames));
		};
	});

	// collar
	auto *collar = app.add_subcommand("collar", "Collar operations")->require_subcommand(1);
	double eps0 = 0.05;
	std::string chi_in, bundle_out;
	{
		auto *ext = collar->add_subcommand("extend", "Extend a collar to a flat trivial end");
		ext->add_option("--mesh", mesh_in)->required();
		ext->add_option("--bundle", bundle_in)->required();
		ext->add_option("--eps0", eps0, "Bound on the trivialized slice connection per unit length")->required();
		ext->add_option("--chi", chi_in, "Cutoff samples {\"t\": [...], \"chi\": [...]} (default: linear)");
		ext->add_option("--mesh-out", mesh_out, "Write the extended mesh");
		ext->add_option("--bundle-out", bundle_out, "Write the extended bundle");
		out_opt(ext);
		ext->callback([&] {
			action = [&] {
				auto m = load_mesh(mesh_in);
				Bundle b = read_bundle(bundle_in, m);
				CutoffProfile prof = CutoffProfile::standard();
				if (!chi_in.empty()) {
					json cj = spec_arg(chi_in);
					try {
						prof.t = cj.at("t").get<std::vector<double>>();
						prof.chi = cj.at("chi").get<std::vector<double>>();
					} catch (const json::exception &e) {
						fail(ErrorKind::io, std::string("cutoff samples: ") + e.what());
					}
				}
				SubMesh end = collar_end_slice(*m);
				auto sm = std::make_shared<const Mesh>(end.mesh);
				Bundle sb = trivial_bundle(sm, b.rank);
				for (int e = 0; e < sm->num_edges(); ++e)
					sb.transport[e] = b.along(m->edge_step(end.to_parent[sm->edge(e)[0]], end.to_parent[sm->edge(e)[1]]));
				auto tr = trivialize(sb, 1.0);
				if (auto *o = std::get_if<Obstruction>(&tr)) {
					emit(g, output, obstruction_json(*o));
					return;
				}
				FrameCertificate cert = std::get<FrameCertificate>(tr);
				auto [omega, onorm] = slice_connection(sb, cert.gauge);
				if (onorm > eps0) {
					emit(g, output, obstruction_json(Obstruction{ObstructionKind::holonomy, "slice connection", -1, onorm}));
					return;
				}
				ExtensionResult ext_r = collar_extend(b, prof, eps0, cert);
				double delta = curvature(b).sup_norm;
				double out_norm = curvature(ext_r.bundle).sup_norm;
				double defect = 0.0;
				const Mesh &em = *ext_r.bundle.base;
				if (em.regions.count("flat_end"))
					for (int p2 : em.plaquettes_of(em.regions.at("flat_end")))
						defect = std::max(defect, dist_identity(ext_r.bundle.holonomy(p2)));
				emit(g, output,
				     {{"result", "extension"},
				      {"input_norm", delta},
				      {"omega_norm", onorm},
				      {"output_norm", out_norm},
				      {"bound", delta + onorm + onorm * onorm},
				      {"flat_end_defect", defect}});
				if (!mesh_out.empty())
					write_json(resolve(g, mesh_out), mesh_to_json(em));
				if (!bundle_out.empty())
					write_json(resolve(g, bundle_out), bundle_to_json(ext_r.bundle));
			};
		});
	}

	// surgery
	auto *surgery_c = app.add_subcommand("surgery", "Bundles across surgery")->require_subcommand(1);
	std::string amps_s = "0,0.05,0.2", scan_flux_s = "-1,0,1,2";
	{
		auto *tp = surgery_c->add_subcommand("transplant", "Split a bundle on the surgered mesh into capped halves");
		tp->add_option("--plan", plan_in, "Plan file or inline JSON")->required();
		tp->add_option("--bundle", bundle_in, "Bundle over the surgered mesh")->required();
		tp->add_option("--eps0", eps0)->required();
		out_opt(tp);
		tp->callback([&] {
			action = [&] {
				SurgerySetup s = build_surgery(spec_arg(plan_in));
				auto out = transplant(read_bundle(bundle_in, s.mesh), s.result, s.plan, eps0);
				if (auto *o = std::get_if<Obstruction>(&out)) {
					emit(g, output, obstruction_json(*o));
					return;
				}
				const auto &t = std::get<TransplantResult>(out);
				json integ = json::object();
				for (auto &[k, v] : t.integrals)
					integ[k] = {{"surgered", v[0]}, {"M_Y", v[1]}, {"X_Y", v[2]}};
				emit(g, output,
				     {{"result", "transplant"},
				      {"integrals", integ},
				      {"identity_residual", t.identity_residual},
				      {"frame_source", t.frame_source},
				      {"slice_residual", t.slice_certificate.residual},
				      {"input_norm", t.input_norm},
				      {"flattened_norm", t.flattened_norm},
				      {"omega_norm", t.omega_norm},
				      {"norm_MY", t.norm_MY},
				      {"norm_XY", t.norm_XY}});
			};
		});

		auto *scan = surgery_c->add_subcommand("threshold-scan", "Smallest ||R|| of a topologically nontrivial corpus bundle");
		scan->add_option("--mesh", mesh_in, "Closed surface mesh")->required();
		scan->add_option("--fluxes", scan_flux_s, "Monopole fluxes of the corpus");
		scan->add_option("--amplitudes", amps_s, "Perturbation amplitudes of the corpus");
		out_opt(scan);
		scan->callback([&] {
			action = [&] {
				auto m = load_mesh(mesh_in);
				auto r = threshold_scan(surface_corpus(m, parse_ints(scan_flux_s), parse_doubles(amps_s), g.seed));
				json j;
				j["delta_star"] = std::isfinite(r.delta_star) ? json(r.delta_star) : json(nullptr);
				j["largest_trivial_norm"] = r.largest_trivial_norm;
				j["flux_bound"] = two_pi / m->total_measure(2);
				j["corpus"] = r.corpus;
				j["nontrivial"] = r.nontrivial;
				j["skipped"] = r.skipped;
				j["norms"] = r.norms;
				j["max_abs_chern"] = r.max_abs_chern;
				emit(g, output, j);
			};
		});
	}

	// karea
	auto *karea_c = app.add_subcommand("karea", "K-area lower bounds")->require_subcommand(1);
	std::string sector_s = "1:1", config_in, csv_out;
	{
		auto *opt = karea_c->add_subcommand("optimize", "Minimize the curvature sup inside a sector");
		opt->add_option("--mesh", mesh_in)->required();
		opt->add_option("--sector", sector_s, "rank:flux[,flux], e.g. 1:1 or 2:1,1");
		opt->add_option("--config", config_in, "Optimizer config file or inline JSON");
		opt->add_option("--csv", csv_out, "Write the trace as CSV");
		out_opt(opt);
		opt->callback([&] {
			action = [&] {
				auto m = load_mesh(mesh_in);
				auto cfg = config_arg(config_in, g.seed);
				auto rep = karea_lower_bound(m, {sector_from_string(sector_s)}, cfg);
				json j = trace_json(rep.best);
				j["sector_spec"] = rep.best_sector.str();
				j["mesh_hash"] = hex_hash(m->combinatorial_hash());
				emit(g, output, j);
				if (!csv_out.empty())
					emit_text(g, csv_out, trace_csv(rep.best));
			};
		});

		auto *sc = karea_c->add_subcommand("scaling", "Bound ratio under metric scaling by c");
		sc->add_option("--mesh", mesh_in)->required();
		sc->add_option("--c", c);
		sc->add_option("--sector", sector_s);
		sc->add_option("--config", config_in);
		out_opt(sc);
		sc->callback([&] {
			action = [&] {
				auto r = scaling_experiment(load_mesh(mesh_in), c, sector_from_string(sector_s), config_arg(config_in, g.seed));
				emit(g, output,
				     {{"c", r.c},
				      {"base_bound", r.base_bound},
				      {"scaled_bound", r.scaled_bound},
				      {"ratio", r.ratio},
				      {"relative_error", r.relative_error},
				      {"pass", r.pass}});
			};
		});

		auto *cv = karea_c->add_subcommand("covering", "Bound ratio across a torus covering");
		cv->add_option("--mesh", mesh_in)->required();
		cv->add_option("--factors", factors_s);
		cv->add_option("--sector", sector_s);
		cv->add_option("--config", config_in);
		cv->add_option("--csv", csv_out, "Write the total-space optimizer trace as CSV");
		out_opt(cv);
		cv->callback([&] {
			action = [&] {
				auto m = load_mesh(mesh_in);
				auto sec = sector_from_string(sector_s);
				auto cfg = config_arg(config_in, g.seed);
				auto r = covering_experiment(m, parse_ints(factors_s), sec, cfg);
				emit(g, output,
				     {{"factors", r.factors},
				      {"sheets", r.sheets},
				      {"base_bound", r.base_bound},
				      {"total_bound", r.total_bound},
				      {"ratio", r.ratio},
				      {"relative_error", r.relative_error},
				      {"total_sup", r.total_sup},
				      {"image_sup", r.image_sup},
				      {"monotone", r.monotone},
				      {"pass", r.pass}});
				if (!csv_out.empty()) {
					CoveringMap cov = covering(m, r.factors);
					emit_text(g, csv_out, trace_csv(karea_lower_bound(cov.total, {sec}, cfg).best));
				}
			};
		});
	}

	// experiment
	auto *exp = app.add_subcommand("experiment", "Reproducible experiments")->require_subcommand(1);
	std::string spec_in;
	int exit_status = exit_pass;
	{
		auto *run = exp->add_subcommand("run", "Run an experiment spec; writes <name>.json and <name>.csv");
		run->add_option("spec", spec_in, "Experiment spec file")->required();
		run->callback([&] {
			action = [&] {
				json spec = read_json(spec_in);
				if (!spec.contains("seed"))
					spec["seed"] = g.seed;
				json report = run_experiment(spec);
				const std::string name = report["experiment"].get<std::string>();
				const std::string base = output.empty() ? name : output;
				write_json(resolve(g, base + ".json"), report);
				emit_text(g, base + ".csv", checks_csv(report));
				for (const auto &ch : report["checks"])
					std::cout << (ch["pass"].get<bool>() ? "PASS " : "FAIL ") << ch["name"].get<std::string>() << '\n';
				if (!report["pass"].get<bool>()) {
					std::cerr << "first failing check: " << report["first_failure"].get<std::string>() << '\n';
					exit_status = exit_assertion;
				}
			};
		});
		run->add_option("-o,--output", output, "Report base name (default: the spec name)");
	}

	try {
		app.parse(argc, argv);
	} catch (const CLI::ParseError &e) {
		int rc = app.exit(e);
		return rc == 0 ? exit_pass : exit_input;
	}
	set_threads(g.threads);
	try {
		action();
	} catch (const Error &e) {
		std::cerr << "karea: " << e.what() << '\n';
		return exit_code_for(e.kind());
	} catch (const std::exception &e) {
		std::cerr << "karea: " << e.what() << '\n';
		return exit_input;
	}
	return exit_status;
}
