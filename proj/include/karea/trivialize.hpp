#pragma once

// Global near-identity frames for small-curvature bundles (tree gauge plus
// Lie-algebra relaxation), the obstructions that prevent them, and the
// extension of a trivialized collar to a flat trivial end.

#include "karea/chern.hpp"

#include <cstdint>
#include <deque>
#include <variant>

namespace karea {

struct FrameCertificate {
	GaugeTransform gauge;
	double residual = 0.0;          // max over edges of ||U' - I||
	double constant_estimate = 0.0; // residual / ||R||
	double input_norm = 0.0;        // ||R|| of the input
	int relax_sweeps = 0;
};

enum class ObstructionKind { nonzero_chern, holonomy, not_simply_connected, branch_cut };

inline const char *to_string(ObstructionKind k)
{
	switch (k) {
	case ObstructionKind::nonzero_chern: return "nonzero_chern";
	case ObstructionKind::holonomy: return "holonomy";
	case ObstructionKind::not_simply_connected: return "not_simply_connected";
	case ObstructionKind::branch_cut: return "branch_cut";
	}
	return "unknown";
}

struct Obstruction {
	ObstructionKind kind;
	std::string witness; // monomial name, "edge <id>" or "plaquette <id>"
	int cell = -1;
	double value = 0.0;
};

using TrivializeResult = std::variant<FrameCertificate, Obstruction>;

/// Spanning forest with one root per component.
struct TreeGauge {
	GaugeTransform gauge;
	std::vector<int> parent;      // vertex -> parent vertex (-1 at roots)
	std::vector<int> parent_edge; // vertex -> tree edge to its parent
	std::vector<int> depth;
	std::vector<char> tree_edge;  // per edge
};

/// Breadth-first tree from `basepoint` (and from the lowest vertex of every
/// other component), neighbours visited in increasing vertex order. The gauge
/// makes every tree transport the identity.
inline TreeGauge tree_gauge(const Bundle &b, int basepoint = 0)
{
	const Mesh &m = *b.base;
	require(m.num_vertices == 0 || (basepoint >= 0 && basepoint < m.num_vertices), ErrorKind::config, "basepoint out of range");
	TreeGauge t;
	t.gauge = identity_gauge(b.base, b.rank);
	t.parent.assign(m.num_vertices, -1);
	t.parent_edge.assign(m.num_vertices, -1);
	t.depth.assign(m.num_vertices, -1);
	t.tree_edge.assign(m.num_edges(), 0);
	auto grow = [&](int root) {
		t.depth[root] = 0;
		std::deque<int> q{root};
		while (!q.empty()) {
			int v = q.front();
			q.pop_front();
			std::vector<std::pair<int, int>> nb;
			for (auto [e, tail] : m.incident_edges(v))
				nb.push_back({m.edge(e)[tail ? 1 : 0], e});
			std::sort(nb.begin(), nb.end());
			for (auto [w, e] : nb) {
				if (t.depth[w] >= 0)
					continue;
				t.depth[w] = t.depth[v] + 1;
				t.parent[w] = v;
				t.parent_edge[w] = e;
				t.tree_edge[e] = 1;
				// g(w) U(v -> w) g(v)^-1 = I
				t.gauge.frame[w] = t.gauge.frame[v] * b.along(m.edge_step(v, w)).adjoint();
				q.push_back(w);
			}
		}
	};
	if (m.num_vertices > 0)
		grow(basepoint);
	for (int v = 0; v < m.num_vertices; ++v)
		if (t.depth[v] < 0)
			grow(v);
	return t;
}

/// Gauged bundle with the tree transports set to the exact identity.
inline Bundle apply_tree_gauge(const Bundle &b, const TreeGauge &t)
{
	Bundle out = gauge(b, t.gauge);
	for (std::size_t e = 0; e < out.transport.size(); ++e)
		if (t.tree_edge[e])
			out.transport[e] = identity(b.rank);
	return out;
}

namespace detail {

/// Cycle space membership over GF(p): rows are plaquette boundaries.
class BoundarySpan {
  public:
	static constexpr std::uint64_t P = 2147483647ull;
	using Row = std::vector<std::pair<int, std::uint64_t>>; // sorted by column

	explicit BoundarySpan(const Mesh &m)
	{
		if (m.dim < 2)
			return;
		for (int p = 0; p < m.num_plaquettes(); ++p) {
			Row r;
			for (auto st : m.plaquette_loop(p))
				r.push_back({st.edge, st.forward ? 1 : P - 1});
			std::sort(r.begin(), r.end());
			r = reduce(std::move(r));
			if (!r.empty())
				insert(std::move(r));
		}
	}
	int rank() const { return static_cast<int>(pivots_.size()); }
	bool contains(Row r) const { return reduce(std::move(r)).empty(); }

  private:
	static std::uint64_t inv(std::uint64_t a)
	{
		std::uint64_t r = 1, e = P - 2;
		while (e) {
			if (e & 1)
				r = r * a % P;
			a = a * a % P;
			e >>= 1;
		}
		return r;
	}
	Row reduce(Row r) const
	{
		std::size_t i = 0;
		while (i < r.size()) {
			auto it = pivots_.find(r[i].first);
			if (it == pivots_.end()) {
				++i;
				continue;
			}
			std::uint64_t c = r[i].second;
			const Row &pr = it->second;
			Row out;
			std::size_t a = 0, b = 0;
			while (a < r.size() || b < pr.size()) {
				if (b == pr.size() || (a < r.size() && r[a].first < pr[b].first)) {
					out.push_back(r[a++]);
				} else if (a == r.size() || pr[b].first < r[a].first) {
					out.push_back({pr[b].first, (P - c * pr[b].second % P) % P});
					++b;
				} else {
					std::uint64_t v = (r[a].second + P - c * pr[b].second % P) % P;
					if (v)
						out.push_back({r[a].first, v});
					++a;
					++b;
				}
			}
			r.swap(out);
			i = 0;
			while (i < r.size() && !pivots_.count(r[i].first))
				++i;
		}
		return r;
	}
	void insert(Row r)
	{
		// normalise on the first column without a pivot
		std::size_t i = 0;
		while (pivots_.count(r[i].first))
			++i;
		std::uint64_t s = inv(r[i].second);
		for (auto &x : r)
			x.second = x.second * s % P;
		pivots_.emplace(r[i].first, std::move(r));
	}
	std::map<int, Row> pivots_;
};

} // namespace detail

/// First Betti number (over GF(p)) of the 2-skeleton.
inline int first_betti(const Mesh &m)
{
	if (m.dim < 1)
		return 0;
	detail::BoundarySpan span(m);
	return m.num_edges() - (m.num_vertices - m.num_components()) - span.rank();
}

/// Non-tree edges whose fundamental cycle does not bound.
inline std::vector<int> nonfillable_cycles(const Mesh &m, const TreeGauge &t)
{
	std::vector<int> out;
	if (m.dim < 1 || first_betti(m) == 0)
		return out;
	detail::BoundarySpan span(m);
	for (int e = 0; e < m.num_edges(); ++e) {
		if (t.tree_edge[e])
			continue;
		std::map<int, std::int64_t> cyc;
		cyc[e] += 1;
		// tail <- ... <- lca -> ... -> head closes the loop head -> tail
		int a = m.edge(e)[1], b = m.edge(e)[0];
		while (a != b) {
			if (t.depth[a] >= t.depth[b]) {
				int pe = t.parent_edge[a];
				cyc[pe] += m.edge(pe)[0] == a ? 1 : -1; // step a -> parent
				a = t.parent[a];
			} else {
				int pe = t.parent_edge[b];
				cyc[pe] += m.edge(pe)[1] == b ? -1 : 1; // step parent -> b
				b = t.parent[b];
			}
		}
		detail::BoundarySpan::Row r;
		for (auto [k, v] : cyc)
			if (v != 0)
				r.push_back({k, static_cast<std::uint64_t>((v % static_cast<std::int64_t>(detail::BoundarySpan::P) +
				                                            detail::BoundarySpan::P) %
				                                           detail::BoundarySpan::P)});
		if (!span.contains(std::move(r)))
			out.push_back(e);
	}
	return out;
}

/// Proper vertex coloring, greedy in vertex order.
inline std::vector<std::vector<int>> vertex_colors(const Mesh &m)
{
	std::vector<int> color(m.num_vertices, -1);
	int nc = 0;
	for (int v = 0; v < m.num_vertices; ++v) {
		std::vector<char> used(nc + 1, 0);
		for (auto [e, tail] : m.incident_edges(v)) {
			int w = m.edge(e)[tail ? 1 : 0];
			if (color[w] >= 0)
				used[color[w]] = 1;
		}
		int c = 0;
		while (used[c])
			++c;
		color[v] = c;
		nc = std::max(nc, c + 1);
	}
	std::vector<std::vector<int>> classes(nc);
	for (int v = 0; v < m.num_vertices; ++v)
		classes[color[v]].push_back(v);
	return classes;
}

struct RelaxResult {
	GaugeTransform gauge;
	std::vector<double> trace; // objective before the first sweep and after each sweep
	int sweeps = 0;
	double residual = 0.0;
};

/// Sum over edges of ||log U||_F^2.
inline double log_objective(const Bundle &b)
{
	CompensatedSum s;
	for (std::size_t e = 0; e < b.transport.size(); ++e)
		s.add(log_unitary(b.transport[e], static_cast<int>(e)).squaredNorm());
	return s.value();
}

/// Colour-by-colour local frame relaxation. At vertex v the frame is rotated
/// by exp(Y / 2), Y the average Lie-algebra misfit of the incident edges; a
/// rotation is kept only if it does not increase the local objective, so
/// the objective never increases. Stops at `target` residual, after
/// `max_iters` sweeps, or when a sweep improves the objective by less than
/// `stall` relative.
inline RelaxResult relax_gauge(const Bundle &b, int max_iters, double target, double stall = 1e-10)
{
	const Mesh &m = *b.base;
	RelaxResult res;
	res.gauge = identity_gauge(b.base, b.rank);
	Bundle cur = b;
	auto colors = vertex_colors(m);
	std::vector<Mat> logs(m.num_edges());
	parallel_for(m.num_edges(), [&](int e) { logs[e] = log_unitary(cur.transport[e], e); });
	auto objective = [&]() {
		CompensatedSum s;
		for (auto &l : logs)
			s.add(l.squaredNorm());
		return s.value();
	};
	res.trace.push_back(objective());
	res.residual = max_edge_residual(cur);
	while (res.sweeps < max_iters && res.residual > target) {
		for (const auto &cls : colors)
			parallel_for(static_cast<int>(cls.size()), [&](int i) {
				int v = cls[i];
				const auto &inc = m.incident_edges(v);
				if (inc.empty())
					return;
				// outgoing edges v -> w: U h^-1; incoming w -> v: h U
				Mat y = Mat::Zero(b.rank, b.rank);
				double old_obj = 0.0;
				for (auto [e, tail] : inc) {
					y += tail ? logs[e] : Mat(-logs[e]);
					old_obj += logs[e].squaredNorm();
				}
				y *= 0.5 / static_cast<double>(inc.size());
				Mat h = exp_antiherm(antiherm_part(y));
				std::vector<Mat> nu, nl;
				double new_obj = 0.0;
				for (auto [e, tail] : inc) {
					Mat u = tail ? Mat(cur.transport[e] * h.adjoint()) : Mat(h * cur.transport[e]);
					Mat l = log_unitary(u, e);
					new_obj += l.squaredNorm();
					nu.push_back(std::move(u));
					nl.push_back(std::move(l));
				}
				if (new_obj > old_obj)
					return;
				for (std::size_t j = 0; j < inc.size(); ++j) {
					cur.transport[inc[j].first] = std::move(nu[j]);
					logs[inc[j].first] = std::move(nl[j]);
				}
				res.gauge.frame[v] = h * res.gauge.frame[v];
			});
		++res.sweeps;
		double obj = objective();
		double prev = res.trace.back();
		res.trace.push_back(obj);
		res.residual = max_edge_residual(cur);
		if (prev - obj <= stall * prev)
			break;
	}
	return res;
}

struct TrivializeOptions {
	int max_sweeps = 2000;
	double stall = 1e-6;
	double chern_tol = 1e-6;
	int basepoint = 0;
};

/// Near-identity global frame with every transport within eps of I, or the
/// obstruction preventing it.
inline TrivializeResult trivialize(const Bundle &b, double eps, const TrivializeOptions &opt = {})
{
	require(eps > 0.0, ErrorKind::config, "trivialization tolerance must be positive");
	const Mesh &m = *b.base;
	double input_norm = 0.0;
	if (m.dim >= 2) {
		try {
			input_norm = curvature(b).sup_norm;
		} catch (const BranchCutError &e) {
			return Obstruction{ObstructionKind::branch_cut, "plaquette " + std::to_string(e.cell()), e.cell(), 0.0};
		}
		if (m.is_closed() && (m.dim == 2 || m.dim == 4)) {
			auto rep = chern_densities(b);
			for (const auto &k : chern_basis(m.dim))
				if (std::abs(rep.totals[k]) > opt.chern_tol)
					return Obstruction{ObstructionKind::nonzero_chern, k, -1, rep.totals[k]};
		}
	}
	TreeGauge t = tree_gauge(b, m.num_vertices > 0 ? opt.basepoint : 0);
	Bundle tb = apply_tree_gauge(b, t);
	auto loops = nonfillable_cycles(m, t);
	if (!loops.empty()) {
		int worst = loops[0];
		double hv = 0.0;
		for (int e : loops) {
			double d = dist_identity(tb.transport[e]);
			if (d > hv) {
				hv = d;
				worst = e;
			}
		}
		if (hv > eps)
			return Obstruction{ObstructionKind::holonomy, "edge " + std::to_string(worst), worst, hv};
		return Obstruction{ObstructionKind::not_simply_connected, "edge " + std::to_string(worst), worst, hv};
	}
	FrameCertificate cert;
	cert.input_norm = input_norm;
	if (max_edge_residual(tb) <= std::numeric_limits<double>::epsilon() * 16) {
		cert.gauge = t.gauge;
		cert.residual = max_edge_residual(gauge(b, cert.gauge));
	} else {
		RelaxResult rr;
		try {
			rr = relax_gauge(tb, opt.max_sweeps, 0.0, opt.stall);
		} catch (const BranchCutError &e) {
			return Obstruction{ObstructionKind::branch_cut, "edge " + std::to_string(e.cell()), e.cell(), 0.0};
		}
		cert.gauge = compose(rr.gauge, t.gauge);
		cert.relax_sweeps = rr.sweeps;
		cert.residual = max_edge_residual(gauge(b, cert.gauge));
	}
	cert.constant_estimate = input_norm > 0 ? cert.residual / input_norm : 0.0;
	if (cert.residual > eps) {
		Bundle g = gauge(b, cert.gauge);
		int worst = 0;
		for (int e = 0; e < m.num_edges(); ++e)
			if (dist_identity(g.transport[e]) > dist_identity(g.transport[worst]))
				worst = e;
		return Obstruction{ObstructionKind::holonomy, "edge " + std::to_string(worst), worst, cert.residual};
	}
	return cert;
}

/// Certificate constant of a mesh: the largest residual / ||R|| over a
/// seeded corpus of perturbed-flat bundles in random gauges.
struct Calibration {
	double constant = 0.0;
	std::vector<double> estimates;
	std::uint64_t mesh_hash = 0;
};

inline Calibration calibrate_constant(std::shared_ptr<const Mesh> m, int rank, std::uint64_t seed, int corpus = 20,
                                      const std::vector<double> &amplitudes = {0.0025, 0.005, 0.01})
{
	Calibration cal;
	cal.mesh_hash = m->combinatorial_hash();
	std::mt19937_64 rng(seed);
	for (int i = 0; i < corpus; ++i) {
		double amp = amplitudes[i % amplitudes.size()];
		Bundle b = perturb(trivial_bundle(m, rank), amp, rng());
		b = gauge(b, random_gauge(m, rank, rng));
		auto r = trivialize(b, 1.0);
		if (auto *c = std::get_if<FrameCertificate>(&r)) {
			cal.estimates.push_back(c->constant_estimate);
			cal.constant = std::max(cal.constant, c->constant_estimate);
		}
	}
	return cal;
}

/// Samples of the cutoff chi on the extension range, in collar length units
/// with the collar end at t = 2.
struct CutoffProfile {
	std::vector<double> t, chi;

	static CutoffProfile standard(double spacing = 0.25)
	{
		require(spacing > 0 && spacing <= 1.0, ErrorKind::config, "profile spacing must be in (0, 1]");
		CutoffProfile p;
		int n = static_cast<int>(std::lround(4.0 / spacing));
		require(std::abs(n * spacing - 4.0) < 1e-12, ErrorKind::config, "profile spacing must divide the extension length");
		for (int i = 1; i <= n; ++i) {
			double t = 2.0 + i * spacing;
			p.t.push_back(t);
			p.chi.push_back(std::clamp((4.0 - t) / 2.0, 0.0, 1.0));
		}
		return p;
	}

	/// chi = 1 below 2, chi = 0 above 4, chi non-increasing with slope at
	/// most 1 in magnitude (the collar end itself counts as t = 2, chi = 1).
	void validate() const
	{
		require(!t.empty() && t.size() == chi.size(), ErrorKind::config, "cutoff profile needs matching samples");
		double pt = 2.0, pc = 1.0;
		for (std::size_t i = 0; i < t.size(); ++i) {
			require(t[i] > pt, ErrorKind::config, "cutoff samples must increase beyond t = 2");
			require(chi[i] >= 0.0 && chi[i] <= 1.0, ErrorKind::config, "cutoff values must lie in [0, 1]");
			if (t[i] > 4.0)
				require(chi[i] == 0.0, ErrorKind::config, "cutoff must vanish beyond t = 4");
			double slope = (pc - chi[i]) / (t[i] - pt);
			require(slope >= -1e-15, ErrorKind::config, "cutoff must not increase");
			require(slope <= 1.0 + 1e-12, ErrorKind::config, "cutoff slope exceeds 1");
			pt = t[i];
			pc = chi[i];
		}
		require(std::abs(t.back() - 6.0) < 1e-12, ErrorKind::config, "cutoff samples must reach t = 6");
	}
};

/// Slice of the collar at its last layer, with its parent vertex map.
inline SubMesh collar_end_slice(const Mesh &m)
{
	require(m.collar.has_value(), ErrorKind::precondition, "mesh has no collar");
	const auto &c = *m.collar;
	return induced(m, c.layers.back(), m.dim - 1);
}

/// Edge logs of a slice bundle in the frame `g` and the largest log norm
/// per unit edge length (the size of the connection form).
inline std::pair<std::vector<Mat>, double> slice_connection(const Bundle &sb, const GaugeTransform &g)
{
	const Mesh &n = *sb.base;
	Bundle tb = gauge(sb, g);
	std::vector<Mat> omega(n.num_edges());
	double norm = 0.0;
	for (int e = 0; e < n.num_edges(); ++e) {
		omega[e] = log_unitary(tb.transport[e], e);
		norm = std::max(norm, norm_normal(omega[e]) / n.edge_length(e));
	}
	return {std::move(omega), norm};
}

struct ExtensionResult {
	Bundle bundle;
	double omega_norm = 0.0; // max ||log U'(e)|| / length(e) on the slice
	int first_new_layer = 0;
};

/// Extends the collar beyond its last layer (taken as t = 2) to t = 6. The
/// trivialized slice connection omega0 is cut off by chi; layers with chi = 0
/// carry identity transports and form the region "flat_end".
inline ExtensionResult collar_extend(const Bundle &b, const CutoffProfile &profile, double eps0,
                                     const std::optional<FrameCertificate> &cert)
{
	profile.validate();
	const Mesh &m = *b.base;
	require(m.collar.has_value(), ErrorKind::precondition, "collar extension needs a collar");
	require(cert.has_value(), ErrorKind::precondition, "collar extension needs a trivialization of the collar slice");
	const Collar &col = *m.collar;
	SubMesh slice = collar_end_slice(m);
	const Mesh &n = slice.mesh;
	const int ns = col.slice_size();
	require(n.num_vertices == ns && static_cast<int>(cert->gauge.frame.size()) == ns, ErrorKind::precondition,
	        "certificate does not match the collar slice");
	ExtensionResult res;
	auto [omega, onorm] = slice_connection(restrict_bundle(b, slice), cert->gauge);
	res.omega_norm = onorm;
	require(res.omega_norm <= eps0, ErrorKind::precondition,
	        "trivialized slice connection exceeds eps0 (" + std::to_string(res.omega_norm) + ")");

	// slice vertex s corresponds to collar end vertex col.layers.back()[s]
	std::vector<int> slice_of(m.num_vertices, -1);
	for (int s = 0; s < ns; ++s)
		slice_of[col.layers.back()[s]] = s;
	std::vector<int> sidx(n.num_vertices);
	for (int v = 0; v < n.num_vertices; ++v)
		sidx[v] = slice_of[slice.to_parent[v]];

	const int L = static_cast<int>(profile.t.size());
	MeshBuilder mb(m.dim);
	mb.add_mesh(m, true);
	const int o = mb.num_raw_vertices();
	mb.add_vertices(ns * L);
	auto vid = [&](int layer, int s) { return layer == 0 ? col.layers.back()[s] : o + (layer - 1) * ns + s; };
	// layer 0 is the collar end, layer j >= 1 is profile sample j - 1
	std::vector<double> tl{2.0};
	tl.insert(tl.end(), profile.t.begin(), profile.t.end());
	for (int j = 1; j <= L; ++j) {
		const double dt = tl[j] - tl[j - 1];
		for (int k = 0; k < n.dim + 1 && k <= m.dim - 1; ++k) {
			// product of each slice k-cell with the segment [j-1, j]
			int cnt = k == 0 ? n.num_vertices : n.count(k);
			for (int i = 0; i < cnt; ++i) {
				Corners base = k == 0 ? Corners{i} : n.corners[k][i];
				Corners c(base.size() * 2);
				for (std::size_t x = 0; x < base.size(); ++x) {
					c[x] = vid(j - 1, sidx[base[x]]);
					c[x + base.size()] = vid(j, sidx[base[x]]);
				}
				double meas = (k == 0 ? 1.0 : n.base_measure[k][i]) * dt;
				std::vector<std::string> tags;
				if (k + 1 == m.dim) {
					tags.push_back("extension");
					if (profile.chi[j - 1] == 0.0 && (j == 1 ? false : profile.chi[j - 2] == 0.0))
						tags.push_back("flat_end");
				}
				mb.add_cell(k + 1, std::move(c), meas, false, tags);
			}
			// the slice cells themselves in layer j
			if (k >= 1) {
				for (int i = 0; i < n.count(k); ++i) {
					Corners c = n.corners[k][i];
					for (int &v : c)
						v = vid(j, sidx[v]);
					mb.add_cell(k, std::move(c), n.base_measure[k][i]);
				}
			}
		}
	}
	auto r = mb.build(Orient::propagate);
	Mesh out = std::move(r.mesh);
	Collar nc = col;
	for (int j = 1; j <= L; ++j) {
		std::vector<int> layer(ns);
		for (int s = 0; s < ns; ++s)
			layer[s] = r.vertex_map[vid(j, s)];
		nc.layers.push_back(std::move(layer));
		nc.t.push_back(col.t.back() + (tl[j] - 2.0));
	}
	res.first_new_layer = col.num_layers();
	out.collar = std::move(nc);
	out.finalize();
	auto mesh = std::make_shared<const Mesh>(std::move(out));

	Bundle ext;
	ext.base = mesh;
	ext.rank = b.rank;
	ext.flat_regions = b.flat_regions;
	if (mesh->regions.count("flat_end"))
		ext.flat_regions.push_back("flat_end");
	ext.transport.assign(mesh->num_edges(), identity(b.rank));
	// old edges keep their transports
	for (int e = 0; e < m.num_edges(); ++e) {
		const auto &c = m.edge(e);
		EdgeStep st = mesh->edge_step(r.vertex_map[c[0]], r.vertex_map[c[1]]);
		ext.transport[st.edge] = st.forward ? b.transport[e] : Mat(b.transport[e].adjoint());
	}
	auto set = [&](int a, int c, const Mat &u) {
		EdgeStep st = mesh->edge_step(a, c);
		ext.transport[st.edge] = st.forward ? u : Mat(u.adjoint());
	};
	// end layer -> first new layer carries the frame change into the trivial frame
	for (int v = 0; v < n.num_vertices; ++v)
		set(r.vertex_map[vid(0, sidx[v])], r.vertex_map[vid(1, sidx[v])], cert->gauge.frame[v]);
	for (int j = 1; j <= L; ++j) {
		double chi = profile.chi[j - 1];
		if (chi == 0.0)
			continue;
		for (int e = 0; e < n.num_edges(); ++e) {
			const auto &c = n.edge(e);
			set(r.vertex_map[vid(j, sidx[c[0]])], r.vertex_map[vid(j, sidx[c[1]])], exp_antiherm(omega[e] * chi));
		}
	}
	res.bundle = std::move(ext);
	return res;
}

/// Pullback along the collar map that squeezes |t| < 2 onto t = 0 and
/// stretches |t| in [2, T] over [0, T].
inline Bundle flatten_collar(const Bundle &b)
{
	const Mesh &m = *b.base;
	require(m.collar.has_value(), ErrorKind::config, "flattening needs a collar");
	const Collar &col = *m.collar;
	const int K = col.num_layers();
	require(K >= 5, ErrorKind::config, "collar needs at least 5 layers to flatten");
	double tmax = 0.0;
	for (double t : col.t)
		tmax = std::max(tmax, std::abs(t));
	require(tmax > 2.0, ErrorKind::config, "collar must extend beyond |t| = 2");
	auto nearest = [&](double t) {
		int best = 0;
		for (int k = 1; k < K; ++k)
			if (std::abs(col.t[k] - t) < std::abs(col.t[best] - t) - 1e-12)
				best = k;
		return best;
	};
	std::vector<int> phi(K);
	for (int k = 0; k < K; ++k) {
		double t = col.t[k];
		double img = std::abs(t) < 2.0 ? 0.0 : (t > 0 ? 1.0 : -1.0) * tmax * (std::abs(t) - 2.0) / (tmax - 2.0);
		phi[k] = nearest(img);
	}
	std::vector<int> vmap(m.num_vertices);
	std::iota(vmap.begin(), vmap.end(), 0);
	std::vector<int> layer_of(m.num_vertices, -1), slice_of(m.num_vertices, -1);
	for (int k = 0; k < K; ++k)
		for (int s = 0; s < col.slice_size(); ++s) {
			int v = col.layers[k][s];
			layer_of[v] = k;
			slice_of[v] = s;
			vmap[v] = col.layers[phi[k]][s];
		}
	auto shared = b.base;
	PathRouter route = [&](int a, int c) {
		require(slice_of[a] >= 0 && slice_of[a] == slice_of[c], ErrorKind::config, "collar map sends an edge off its fibre");
		int s = slice_of[a];
		std::vector<EdgeStep> path;
		int ka = layer_of[a], kc = layer_of[c];
		int dir = kc > ka ? 1 : -1;
		for (int k = ka; k != kc; k += dir)
			path.push_back(m.edge_step(col.layers[k][s], col.layers[k + dir][s]));
		return path;
	};
	MeshMap f = make_map(shared, shared, std::move(vmap), {}, route);
	Bundle out = pullback(b, f);
	out.flat_regions = b.flat_regions;
	return out;
}

} // namespace karea
