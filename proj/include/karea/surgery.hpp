#pragma once

// Bundles across a surgery: flatten the collar, cut at its middle layer,
// trivialize the cut, extend both halves to flat trivial ends, and cap them
// with the removed piece Y carrying the trivial flat connection. The Chern
// totals of the two capped bundles add up to the total over the surgered
// mesh.

#include "karea/trivialize.hpp"

#include <array>

namespace karea {

struct TransplantResult {
	Bundle bundle_MY; // over M' u Y, the reconstituted source
	Bundle bundle_XY; // over X u -Y, the capped handle side
	/// monomial -> {total over the surgered mesh, over M' u Y, over X u -Y}
	std::map<std::string, std::array<double, 3>> integrals;
	double identity_residual = 0.0;
	FrameCertificate slice_certificate; // frame of the cut (over the double when p = 1)
	std::string frame_source;           // "slice" or "double"
	double input_norm = 0.0, flattened_norm = 0.0, omega_norm = 0.0;
	double norm_MY = 0.0, norm_XY = 0.0;
};

using TransplantOutcome = std::variant<TransplantResult, Obstruction>;

namespace detail {

/// One side of the cut with its half of the collar, oriented so that the cut
/// layer is the last collar layer.
inline SubMesh cut_side(const Mesh &s, const std::string &region, bool handle_side)
{
	SubMesh side = restrict_to(s, s.region(region));
	const Collar &c = *s.collar;
	std::vector<int> inv(s.num_vertices, -1);
	for (int v = 0; v < side.mesh.num_vertices; ++v)
		inv[side.to_parent[v]] = v;
	Collar nc;
	nc.region = c.region;
	nc.anchor = c.anchor;
	auto push = [&](int k, double t) {
		std::vector<int> layer(c.slice_size());
		for (int i = 0; i < c.slice_size(); ++i) {
			layer[i] = inv[c.layers[k][i]];
			require(layer[i] >= 0, ErrorKind::config, "collar layer leaves the cut side '" + region + "'");
		}
		nc.layers.push_back(std::move(layer));
		nc.t.push_back(t);
	};
	if (!handle_side)
		for (int k = 0; k <= c.cut_layer; ++k)
			push(k, c.t[k]);
	else
		for (int k = c.num_layers() - 1; k >= c.cut_layer; --k)
			push(k, -c.t[k]);
	side.mesh.collar = std::move(nc);
	side.mesh.finalize();
	return side;
}

/// Glues y (source vertex ids in y.to_parent) onto the flat end of an
/// extended bundle through the collar anchors; y carries identity transports.
inline Bundle cap_flat_end(const Bundle &e, const SubMesh &y, const std::vector<int> &anchor, const std::string &tag)
{
	const Mesh &m = *e.base;
	const auto &end = m.collar->layers.back();
	std::map<int, int> y_of_source;
	for (int v = 0; v < y.mesh.num_vertices; ++v)
		y_of_source[y.to_parent[v]] = v;
	Mesh piece = y.mesh;
	piece.regions.clear();
	MeshBuilder mb(m.dim);
	int o1 = mb.add_mesh(m, true);
	int o2 = mb.add_mesh(piece, false, "", {tag});
	for (std::size_t s = 0; s < end.size(); ++s) {
		auto it = y_of_source.find(anchor[s]);
		require(it != y_of_source.end(), ErrorKind::gluing, "removed piece does not contain a collar anchor");
		mb.identify(o1 + end[s], o2 + it->second);
	}
	auto r = mb.build(Orient::propagate);
	Mesh out = std::move(r.mesh);
	Collar c = *m.collar;
	for (auto &layer : c.layers)
		for (int &v : layer)
			v = r.vertex_map[o1 + v];
	out.collar = std::move(c);
	out.finalize();
	auto mesh = std::make_shared<const Mesh>(std::move(out));
	Bundle cb = trivial_bundle(mesh, e.rank);
	cb.flat_regions = e.flat_regions;
	cb.flat_regions.push_back(tag);
	for (int i = 0; i < m.num_edges(); ++i) {
		const auto &c2 = m.edge(i);
		EdgeStep st = mesh->edge_step(r.vertex_map[o1 + c2[0]], r.vertex_map[o1 + c2[1]]);
		cb.transport[st.edge] = st.forward ? e.transport[i] : Mat(e.transport[i].adjoint());
	}
	return cb;
}

inline std::map<std::string, double> basis_totals(const Bundle &b)
{
	std::map<std::string, double> out;
	if (chern_basis(b.base->dim).empty())
		return out;
	auto rep = chern_densities(b);
	for (const auto &k : chern_basis(b.base->dim))
		out[k] = rep.totals[k];
	return out;
}

} // namespace detail

/// The surgery-transplant pipeline. `eps0` bounds the slice connection form
/// (log norm per unit length) in the trivializing frame.
inline TransplantOutcome transplant(const Bundle &b, const SurgeryResult &sr, const SurgeryPlan &plan, double eps0,
                                    const CutoffProfile &profile = CutoffProfile::standard(),
                                    const TrivializeOptions &opt = {})
{
	require(eps0 > 0.0, ErrorKind::config, "eps0 must be positive");
	const Mesh &s = *b.base;
	require(s.collar.has_value() && s.collar->cut_layer >= 0, ErrorKind::precondition, "bundle base carries no surgery collar");
	require(s.combinatorial_hash() == sr.mesh.combinatorial_hash(), ErrorKind::config, "bundle base is not the surgered mesh");
	require(s.regions.count("M'") && s.regions.count("X"), ErrorKind::precondition, "surgered mesh lacks the M' and X labels");
	const Collar &col = *s.collar;

	TransplantResult res;
	try {
		res.input_norm = curvature(b).sup_norm;
	} catch (const BranchCutError &e) {
		return Obstruction{ObstructionKind::branch_cut, "plaquette " + std::to_string(e.cell()), e.cell(), 0.0};
	}
	Bundle flat = flatten_collar(b);
	res.flattened_norm = curvature(flat).sup_norm;

	SubMesh side_a = detail::cut_side(s, "M'", false);
	SubMesh side_b = detail::cut_side(s, "X", true);
	auto mesh_a = std::make_shared<const Mesh>(side_a.mesh);
	auto mesh_b = std::make_shared<const Mesh>(side_b.mesh);
	side_a.mesh = Mesh();
	side_b.mesh = Mesh();
	auto restrict_to_side = [&](const std::shared_ptr<const Mesh> &m, const std::vector<int> &to_parent) {
		Bundle out = trivial_bundle(m, b.rank);
		for (int e = 0; e < m->num_edges(); ++e)
			out.transport[e] = flat.along(s.edge_step(to_parent[m->edge(e)[0]], to_parent[m->edge(e)[1]]));
		return out;
	};
	Bundle ba = restrict_to_side(mesh_a, side_a.to_parent);
	Bundle bb = restrict_to_side(mesh_b, side_b.to_parent);

	// frame on the cut, keyed by surgered-mesh vertex
	const auto &cut = col.layers[col.cut_layer];
	double min_len = std::numeric_limits<double>::infinity();
	SubMesh slice = induced(s, cut, s.dim - 1);
	for (int e = 0; e < slice.mesh.num_edges(); ++e)
		min_len = std::min(min_len, slice.mesh.edge_length(e));
	if (!std::isfinite(min_len))
		min_len = 1.0;
	const double eps = eps0 * min_len;
	std::map<int, Mat> frame;
	TrivializeResult tr;
	if (plan.p == 1) {
		// trivialize over the double of the handle side, then restrict
		res.frame_source = "double";
		DoubleResult d = double_mesh(*mesh_b);
		std::vector<int> fold(d.mesh.num_vertices, -1);
		for (int v = 0; v < mesh_b->num_vertices; ++v) {
			fold[d.first[v]] = v;
			fold[d.second[v]] = v;
		}
		auto dm = std::make_shared<const Mesh>(std::move(d.mesh));
		Bundle bd = pullback(bb, make_map(dm, mesh_b, std::move(fold)));
		tr = trivialize(bd, eps, opt);
		if (auto *c = std::get_if<FrameCertificate>(&tr))
			for (int v = 0; v < mesh_b->num_vertices; ++v)
				frame[side_b.to_parent[v]] = c->gauge.frame[d.first[v]];
	} else {
		res.frame_source = "slice";
		auto sm = std::make_shared<const Mesh>(std::move(slice.mesh));
		Bundle sb = trivial_bundle(sm, b.rank);
		for (int e = 0; e < sm->num_edges(); ++e)
			sb.transport[e] = flat.along(s.edge_step(slice.to_parent[sm->edge(e)[0]], slice.to_parent[sm->edge(e)[1]]));
		tr = trivialize(sb, eps, opt);
		if (auto *c = std::get_if<FrameCertificate>(&tr))
			for (int v = 0; v < sm->num_vertices; ++v)
				frame[slice.to_parent[v]] = c->gauge.frame[v];
	}
	if (auto *o = std::get_if<Obstruction>(&tr))
		return *o;
	res.slice_certificate = std::get<FrameCertificate>(tr);

	auto side_certificate = [&](const std::shared_ptr<const Mesh> &m, const std::vector<int> &to_parent) {
		SubMesh end = collar_end_slice(*m);
		FrameCertificate c = res.slice_certificate;
		c.gauge = identity_gauge(std::make_shared<const Mesh>(end.mesh), b.rank);
		for (int v = 0; v < end.mesh.num_vertices; ++v)
			c.gauge.frame[v] = frame.at(to_parent[end.to_parent[v]]);
		return c;
	};
	FrameCertificate ca = side_certificate(mesh_a, side_a.to_parent);
	FrameCertificate cb = side_certificate(mesh_b, side_b.to_parent);
	const double unbounded = std::numeric_limits<double>::infinity();
	ExtensionResult ea = collar_extend(ba, profile, unbounded, ca);
	res.omega_norm = ea.omega_norm;
	if (res.omega_norm > eps0)
		return Obstruction{ObstructionKind::holonomy, "slice connection", -1, res.omega_norm};
	ExtensionResult eb = collar_extend(bb, profile, eps0, cb);
	res.bundle_MY = detail::cap_flat_end(ea.bundle, sr.region, col.anchor, "Y");
	res.bundle_XY = detail::cap_flat_end(eb.bundle, sr.region, col.anchor, "-Y");
	res.norm_MY = curvature(res.bundle_MY).sup_norm;
	res.norm_XY = curvature(res.bundle_XY).sup_norm;

	auto t0 = detail::basis_totals(flat);
	auto t1 = detail::basis_totals(res.bundle_MY);
	auto t2 = detail::basis_totals(res.bundle_XY);
	for (auto &[k, v] : t0) {
		res.integrals[k] = {v, t1[k], t2[k]};
		res.identity_residual = std::max(res.identity_residual, std::abs(v - t1[k] - t2[k]));
	}
	return res;
}

/// Pullback along the degree-one collapse M1 # M2 -> M1.
inline Bundle collapse_map_pullback(const Bundle &b, const ConnectedSum &cs)
{
	require(b.base->num_vertices == cs.m1_vertices && b.base->num_top() == cs.m1_top, ErrorKind::config,
	        "bundle base does not match the first summand");
	return pullback(b, collapse_map(cs, b.base));
}

struct ThresholdScan {
	/// smallest ||R|| among corpus bundles with a basis Chern number above
	/// tol; infinity when every corpus bundle is topologically trivial
	double delta_star = std::numeric_limits<double>::infinity();
	double largest_trivial_norm = 0.0; // largest ||R|| among the trivial ones
	int corpus = 0, nontrivial = 0, skipped = 0;
	std::vector<double> norms, max_abs_chern;
};

inline ThresholdScan threshold_scan(const std::vector<Bundle> &corpus, double tol = 1e-6)
{
	ThresholdScan s;
	for (const Bundle &b : corpus) {
		double r = 0.0, c = 0.0;
		try {
			r = curvature(b).sup_norm;
			for (auto &[k, v] : detail::basis_totals(b))
				c = std::max(c, std::abs(v));
		} catch (const BranchCutError &) {
			++s.skipped;
			continue;
		}
		++s.corpus;
		s.norms.push_back(r);
		s.max_abs_chern.push_back(c);
		if (c > tol) {
			++s.nontrivial;
			s.delta_star = std::min(s.delta_star, r);
		} else {
			s.largest_trivial_norm = std::max(s.largest_trivial_norm, r);
		}
	}
	return s;
}

/// Perturbed monopoles of each flux and amplitude on a closed surface, one
/// seed per bundle drawn from `seed`.
inline std::vector<Bundle> surface_corpus(std::shared_ptr<const Mesh> m, const std::vector<int> &fluxes,
                                          const std::vector<double> &amplitudes, std::uint64_t seed, int per_cell = 1)
{
	std::mt19937_64 rng(seed);
	std::vector<Bundle> out;
	for (int k : fluxes) {
		Bundle base = k == 0 ? trivial_bundle(m, 1) : monopole_bundle(m, static_cast<double>(k));
		for (double a : amplitudes)
			for (int i = 0; i < per_cell; ++i)
				out.push_back(perturb(base, a, rng()));
	}
	return out;
}

} // namespace karea
