#pragma once

// Oriented cubical cell complexes with piecewise-flat metric data.
//
// A k-cell is a combinatorial k-cube stored by its 2^k corner vertices in
// binary order: corner x has coordinate bit i equal to (x >> i) & 1. The
// corner order fixes the cell orientation (axis 0, axis 1, ...). Vertices are
// the 0-cells. Every cell is identified by its vertex set, so two distinct
// cells never share all of their corners.

#include "karea/error.hpp"
#include "karea/linalg.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace karea {

using Corners = std::vector<int>;

struct Incidence {
	int face;
	int sign;
};

/// One step of an edge path: edge id and whether it is traversed along its
/// stored orientation.
struct EdgeStep {
	int edge;
	bool forward;
};

/// Product neighbourhood N x [t0, t1] of a cut or boundary. Layer k holds the
/// copy of slice vertex s at coordinate t[k].
struct Collar {
	std::string region;                   // top cells lying in the collar
	std::vector<double> t;                // layer coordinates (length units)
	std::vector<std::vector<int>> layers; // layers[k][s] -> vertex id
	std::vector<int> anchor;              // slice index -> vertex of the pre-surgery mesh (optional)
	int cut_layer = -1;                   // layer of the surgery cut, -1 if none

	int num_layers() const { return static_cast<int>(layers.size()); }
	int slice_size() const { return layers.empty() ? 0 : static_cast<int>(layers[0].size()); }
};

namespace detail {

inline int cube_dim(std::size_t ncorners)
{
	int k = std::countr_zero(ncorners);
	return k;
}

/// Corners of face (axis, side) of a k-cube, in the face's own binary order.
inline Corners cube_face(const Corners &c, int axis, int side)
{
	const int k = cube_dim(c.size());
	Corners out;
	out.reserve(c.size() / 2);
	for (int y = 0; y < (1 << (k - 1)); ++y) {
		int lo = y & ((1 << axis) - 1);
		int hi = (y >> axis) << (axis + 1);
		out.push_back(c[hi | (side << axis) | lo]);
	}
	return out;
}

/// Sign of face (axis, side) in the cubical boundary operator.
inline int cube_face_sign(int axis, int side) { return ((axis % 2 == 0) ? 1 : -1) * (side ? 1 : -1); }

inline int perm_sign(std::vector<int> p)
{
	int s = 1;
	for (std::size_t i = 0; i < p.size(); ++i)
		while (p[i] != static_cast<int>(i)) {
			std::swap(p[i], p[p[i]]);
			s = -s;
		}
	return s;
}

/// +1/-1 if corner list b is an orientation preserving/reversing cube
/// symmetry of a, 0 if b is not a relabelling of the same cube.
inline int relative_orientation(const Corners &a, const Corners &b)
{
	if (a.size() != b.size())
		return 0;
	const int k = cube_dim(a.size());
	auto pos = [&](int v) {
		auto it = std::find(a.begin(), a.end(), v);
		return it == a.end() ? -1 : static_cast<int>(it - a.begin());
	};
	int b0 = pos(b[0]);
	if (b0 < 0)
		return 0;
	std::vector<int> axis(k);
	for (int j = 0; j < k; ++j) {
		int p = pos(b[1 << j]);
		if (p < 0)
			return 0;
		int d = p ^ b0;
		if (std::popcount(static_cast<unsigned>(d)) != 1)
			return 0;
		axis[j] = std::countr_zero(static_cast<unsigned>(d));
	}
	for (int x = 0; x < (1 << k); ++x) {
		int m = b0;
		for (int j = 0; j < k; ++j)
			if (x >> j & 1)
				m ^= 1 << axis[j];
		if (a[m] != b[x])
			return 0;
	}
	std::vector<int> seen(axis);
	std::sort(seen.begin(), seen.end());
	for (int j = 0; j < k; ++j)
		if (seen[j] != j)
			return 0;
	int s = perm_sign(axis);
	return (std::popcount(static_cast<unsigned>(b0)) % 2 == 0) ? s : -s;
}

/// Reverses the orientation of a cell by reflecting its axis 0.
inline Corners reflect_axis0(const Corners &c)
{
	Corners out(c.size());
	for (std::size_t x = 0; x < c.size(); ++x)
		out[x] = c[x ^ 1];
	return out;
}

inline std::vector<int> sorted(Corners c)
{
	std::sort(c.begin(), c.end());
	return c;
}

class UnionFind {
  public:
	explicit UnionFind(int n = 0) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }
	int add(int n)
	{
		int off = static_cast<int>(parent_.size());
		for (int i = 0; i < n; ++i)
			parent_.push_back(off + i);
		return off;
	}
	int find(int x)
	{
		while (parent_[x] != x) {
			parent_[x] = parent_[parent_[x]];
			x = parent_[x];
		}
		return x;
	}
	void unite(int a, int b)
	{
		a = find(a);
		b = find(b);
		if (a != b)
			parent_[std::max(a, b)] = std::min(a, b);
	}
	int size() const { return static_cast<int>(parent_.size()); }

  private:
	std::vector<int> parent_;
};

} // namespace detail

class Mesh {
  public:
	int dim = 0;
	int num_vertices = 0;
	/// corners[k][i] for k = 0..dim; corners[0][v] == {v}.
	std::vector<std::vector<Corners>> corners;
	/// Unscaled metric measure of each cell (length, area, volume ...).
	std::vector<std::vector<double>> base_measure;
	/// Global metric scale c: k-cell measures are base * c^k.
	double metric_scale = 1.0;
	/// Named sets of top-cell ids.
	std::map<std::string, std::vector<int>> regions;
	std::optional<Collar> collar;

	/// Generator descriptor ("torus", "cubed_sphere", "product", ...).
	std::string generator;
	/// Integer lattice coordinates and periods, present on tori.
	std::vector<std::vector<int>> coords;
	std::vector<int> periods;
	/// Product structure: vertex = va + factor_a->num_vertices * vb.
	std::shared_ptr<const Mesh> factor_a, factor_b;

	int count(int k) const { return k <= dim ? static_cast<int>(corners[k].size()) : 0; }
	int num_edges() const { return count(1); }
	int num_plaquettes() const { return count(2); }
	int num_top() const { return count(dim); }

	double measure(int k, int i) const
	{
		double f = 1.0;
		for (int j = 0; j < k; ++j)
			f *= metric_scale;
		return base_measure[k][i] * f;
	}
	double edge_length(int e) const { return measure(1, e); }
	double plaquette_area(int p) const { return measure(2, p); }

	const Corners &edge(int e) const { return corners[1][e]; }

	/// Rebuilds lookup tables and incidence data; validates the complex.
	void finalize();

	int find_cell(int k, const Corners &verts) const
	{
		auto it = lookup_[k].find(detail::sorted(verts));
		return it == lookup_[k].end() ? -1 : it->second;
	}
	int find_edge(int a, int b) const { return find_cell(1, {a, b}); }
	EdgeStep edge_step(int a, int b) const
	{
		int e = find_edge(a, b);
		require(e >= 0, ErrorKind::config, "no edge between vertices " + std::to_string(a) + " and " + std::to_string(b));
		return {e, corners[1][e][0] == a};
	}

	const std::vector<Incidence> &faces(int k, int i) const { return faces_[k][i]; }
	const std::array<EdgeStep, 4> &plaquette_loop(int p) const { return loops_[p]; }
	const std::vector<int> &top_cofaces(int facet) const { return cofaces_[facet]; }
	const std::vector<std::pair<int, bool>> &incident_edges(int v) const { return vertex_edges_[v]; }

	int euler_characteristic() const
	{
		int chi = 0;
		for (int k = 0; k <= dim; ++k)
			chi += (k % 2 == 0 ? 1 : -1) * count(k);
		return chi;
	}

	/// Facets ((dim-1)-cells) with a single incident top cell.
	std::vector<int> boundary_facets() const
	{
		std::vector<int> out;
		if (dim == 0)
			return out;
		for (int f = 0; f < count(dim - 1); ++f)
			if (cofaces_[f].size() == 1)
				out.push_back(f);
		return out;
	}
	bool is_closed() const { return boundary_facets().empty(); }

	std::vector<int> boundary_vertices() const
	{
		std::set<int> vs;
		for (int f : boundary_facets())
			for (int v : corners[dim - 1][f])
				vs.insert(v);
		return {vs.begin(), vs.end()};
	}

	/// Signed boundary of every boundary vanishes.
	bool boundary_of_boundary_zero() const
	{
		for (int k = 2; k <= dim; ++k)
			for (int i = 0; i < count(k); ++i) {
				std::map<int, int> acc;
				for (auto [f, s] : faces_[k][i])
					for (auto [g, t] : faces_[k - 1][f])
						acc[g] += s * t;
				for (auto [g, v] : acc)
					if (v != 0)
						return false;
			}
		return true;
	}

	/// Adjacent top cells induce opposite orientations on their shared facet.
	bool is_consistently_oriented() const
	{
		if (dim == 0)
			return true;
		std::vector<int> acc(count(dim - 1), 0);
		for (int c = 0; c < num_top(); ++c)
			for (auto [f, s] : faces_[dim][c])
				acc[f] += s;
		for (int f = 0; f < count(dim - 1); ++f)
			if (cofaces_[f].size() == 2 && acc[f] != 0)
				return false;
		return true;
	}

	/// Connected component id per vertex (by edges), numbered by lowest vertex.
	std::vector<int> vertex_components() const
	{
		detail::UnionFind uf(num_vertices);
		for (int e = 0; e < num_edges(); ++e)
			uf.unite(corners[1][e][0], corners[1][e][1]);
		std::vector<int> comp(num_vertices, -1);
		std::map<int, int> id;
		for (int v = 0; v < num_vertices; ++v) {
			int r = uf.find(v);
			auto [it, fresh] = id.emplace(r, static_cast<int>(id.size()));
			comp[v] = it->second;
		}
		return comp;
	}
	int num_components() const
	{
		auto c = vertex_components();
		return c.empty() ? 0 : *std::max_element(c.begin(), c.end()) + 1;
	}

	double total_measure(int k) const
	{
		CompensatedSum s;
		for (int i = 0; i < count(k); ++i)
			s.add(measure(k, i));
		return s.value();
	}

	/// Top-cell ids of a named region; throws if absent.
	const std::vector<int> &region(const std::string &name) const
	{
		auto it = regions.find(name);
		require(it != regions.end(), ErrorKind::config, "mesh has no region '" + name + "'");
		return it->second;
	}

	/// Vertices of the given top cells.
	std::set<int> vertices_of(const std::vector<int> &tops) const
	{
		std::set<int> vs;
		for (int c : tops)
			for (int v : corners[dim][c])
				vs.insert(v);
		return vs;
	}

	/// Plaquettes that are faces of the given top cells.
	std::set<int> plaquettes_of(const std::vector<int> &tops) const
	{
		std::set<int> out;
		if (dim < 2)
			return out;
		std::set<int> cur(tops.begin(), tops.end());
		for (int k = dim; k > 2; --k) {
			std::set<int> next;
			for (int c : cur)
				for (auto inc : faces_[k][c])
					next.insert(inc.face);
			cur.swap(next);
		}
		return cur;
	}

	/// Hash of the combinatorics (corner lists), independent of the metric.
	std::uint64_t combinatorial_hash() const
	{
		std::uint64_t h = 1469598103934665603ull;
		auto mix = [&](std::uint64_t x) {
			for (int i = 0; i < 8; ++i) {
				h ^= (x >> (8 * i)) & 0xff;
				h *= 1099511628211ull;
			}
		};
		mix(static_cast<std::uint64_t>(dim));
		mix(static_cast<std::uint64_t>(num_vertices));
		for (int k = 1; k <= dim; ++k) {
			mix(static_cast<std::uint64_t>(count(k)));
			for (auto &c : corners[k])
				for (int v : c)
					mix(static_cast<std::uint64_t>(v));
		}
		return h;
	}

  private:
	std::vector<std::map<std::vector<int>, int>> lookup_;
	std::vector<std::vector<std::vector<Incidence>>> faces_;
	std::vector<std::array<EdgeStep, 4>> loops_;
	std::vector<std::vector<int>> cofaces_;
	std::vector<std::vector<std::pair<int, bool>>> vertex_edges_; // (edge, vertex is tail)
};

inline void Mesh::finalize()
{
	require(dim >= 0 && static_cast<int>(corners.size()) == dim + 1, ErrorKind::config, "corner table does not match dim");
	if (corners[0].empty() && num_vertices > 0) {
		corners[0].resize(num_vertices);
		for (int v = 0; v < num_vertices; ++v)
			corners[0][v] = {v};
	}
	require(static_cast<int>(corners[0].size()) == num_vertices, ErrorKind::config, "vertex table size mismatch");
	base_measure.resize(dim + 1);
	if (base_measure[0].size() != corners[0].size())
		base_measure[0].assign(num_vertices, 1.0);
	lookup_.assign(dim + 1, {});
	faces_.assign(dim + 1, {});
	for (int k = 0; k <= dim; ++k) {
		require(base_measure[k].size() == corners[k].size(), ErrorKind::config,
		        "measure table size mismatch at level " + std::to_string(k));
		for (int i = 0; i < count(k); ++i) {
			const auto &c = corners[k][i];
			require(c.size() == (std::size_t{1} << k), ErrorKind::config, "cell has wrong corner count");
			for (int v : c)
				require(v >= 0 && v < num_vertices, ErrorKind::config, "corner vertex out of range");
			auto key = detail::sorted(c);
			require(std::adjacent_find(key.begin(), key.end()) == key.end(), ErrorKind::config,
			        "cell with repeated corners at level " + std::to_string(k));
			require(base_measure[k][i] > 0.0, ErrorKind::config, "non-positive cell measure");
			auto [it, fresh] = lookup_[k].emplace(std::move(key), i);
			require(fresh, ErrorKind::config, "duplicate cell at level " + std::to_string(k));
		}
	}
	for (int k = 1; k <= dim; ++k) {
		faces_[k].resize(count(k));
		for (int i = 0; i < count(k); ++i) {
			const auto &c = corners[k][i];
			for (int axis = 0; axis < k; ++axis)
				for (int side = 0; side < 2; ++side) {
					Corners fc = detail::cube_face(c, axis, side);
					int f = find_cell(k - 1, fc);
					require(f >= 0, ErrorKind::config, "missing face of a level-" + std::to_string(k) + " cell");
					int rel = detail::relative_orientation(corners[k - 1][f], fc);
					require(rel != 0, ErrorKind::config, "face corners are not a cube relabelling");
					faces_[k][i].push_back({f, detail::cube_face_sign(axis, side) * rel});
				}
		}
	}
	loops_.clear();
	if (dim >= 2) {
		loops_.resize(count(2));
		for (int p = 0; p < count(2); ++p) {
			const auto &c = corners[2][p];
			loops_[p] = {edge_step(c[0], c[1]), edge_step(c[1], c[3]), edge_step(c[3], c[2]), edge_step(c[2], c[0])};
		}
	}
	cofaces_.assign(dim >= 1 ? count(dim - 1) : 0, {});
	if (dim >= 1)
		for (int c = 0; c < num_top(); ++c)
			for (auto inc : faces_[dim][c])
				cofaces_[inc.face].push_back(c);
	vertex_edges_.assign(num_vertices, {});
	if (dim >= 1)
		for (int e = 0; e < num_edges(); ++e) {
			vertex_edges_[corners[1][e][0]].push_back({e, true});
			vertex_edges_[corners[1][e][1]].push_back({e, false});
		}
	for (auto &[name, cells] : regions)
		for (int c : cells)
			require(c >= 0 && c < num_top(), ErrorKind::config, "region '" + name + "' references a missing cell");
}

/// How the builder treats top-cell orientations.
enum class Orient {
	keep,      // leave corner orders untouched
	propagate, // make adjacent cells consistent, never flipping cells marked fixed
};

/// Assembles a mesh from pieces: add cells with raw vertex ids, identify
/// vertices, then build() merges cells by vertex set (first measure wins),
/// prunes lower cells that bound no top cell and fixes orientations.
class MeshBuilder {
  public:
	explicit MeshBuilder(int dim) : dim_(dim), cells_(dim + 1) {}

	int add_vertices(int n) { return uf_.add(n); }
	void identify(int a, int b) { uf_.unite(a, b); }
	int num_raw_vertices() const { return uf_.size(); }

	/// Adds a cell; returns its raw index at that level.
	int add_cell(int k, Corners c, double measure, bool fixed = false, std::vector<std::string> tags = {})
	{
		cells_[k].push_back({std::move(c), measure, fixed, std::move(tags)});
		return static_cast<int>(cells_[k].size()) - 1;
	}

	/// Adds every cell of m with vertex offset; regions of m become tags
	/// (prefixed) on its top cells. Returns the vertex offset.
	int add_mesh(const Mesh &m, bool fixed, const std::string &region_prefix = "", const std::vector<std::string> &extra_tags = {})
	{
		require(m.dim == dim_, ErrorKind::config, "dimension mismatch while assembling mesh");
		int off = add_vertices(m.num_vertices);
		std::vector<std::vector<std::string>> tags(m.num_top(), extra_tags);
		for (auto &[name, cells] : m.regions)
			for (int c : cells)
				tags[c].push_back(region_prefix + name);
		for (int k = 1; k <= dim_; ++k)
			for (int i = 0; i < m.count(k); ++i) {
				Corners c = m.corners[k][i];
				for (int &v : c)
					v += off;
				add_cell(k, std::move(c), m.measure(k, i), fixed && k == dim_, k == dim_ ? tags[i] : std::vector<std::string>{});
			}
		return off;
	}

	struct Result {
		Mesh mesh;
		std::vector<int> vertex_map;     // raw vertex -> new vertex (-1 if dropped)
		std::vector<int> top_map;        // raw top index -> new top index
		std::vector<bool> flipped;       // per new top cell
	};

	Result build(Orient orient = Orient::propagate);

  private:
	struct RawCell {
		Corners corners;
		double measure;
		bool fixed;
		std::vector<std::string> tags;
	};
	int dim_;
	detail::UnionFind uf_;
	std::vector<std::vector<RawCell>> cells_;
};

inline MeshBuilder::Result MeshBuilder::build(Orient orient)
{
	const int n_raw = uf_.size();
	Result res;
	Mesh &m = res.mesh;
	m.dim = dim_;
	// merge top cells and lower cells by vertex set (roots)
	std::vector<std::vector<Corners>> cells(dim_ + 1);
	std::vector<std::vector<double>> meas(dim_ + 1);
	std::vector<bool> fixed;
	std::vector<std::vector<std::string>> tags;
	res.top_map.assign(cells_[dim_].size(), -1);
	for (int k = dim_; k >= 1; --k) {
		std::map<std::vector<int>, int> seen;
		for (std::size_t i = 0; i < cells_[k].size(); ++i) {
			auto &rc = cells_[k][i];
			Corners c = rc.corners;
			for (int &v : c)
				v = uf_.find(v);
			auto key = detail::sorted(c);
			if (std::adjacent_find(key.begin(), key.end()) != key.end())
				fail(ErrorKind::gluing, "gluing collapses a level-" + std::to_string(k) + " cell");
			auto it = seen.find(key);
			if (it != seen.end()) {
				if (k == dim_)
					fail(ErrorKind::gluing, "two top cells share the same vertex set");
				continue;
			}
			seen.emplace(std::move(key), static_cast<int>(cells[k].size()));
			if (k == dim_) {
				res.top_map[i] = static_cast<int>(cells[k].size());
				fixed.push_back(rc.fixed);
				tags.push_back(rc.tags);
			}
			cells[k].push_back(std::move(c));
			meas[k].push_back(rc.measure);
		}
	}
	// prune lower cells that bound no kept higher cell
	for (int k = dim_ - 1; k >= 1; --k) {
		std::set<std::vector<int>> needed;
		for (auto &c : cells[k + 1])
			for (int axis = 0; axis <= k; ++axis)
				for (int side = 0; side < 2; ++side)
					needed.insert(detail::sorted(detail::cube_face(c, axis, side)));
		std::vector<Corners> kc;
		std::vector<double> km;
		for (std::size_t i = 0; i < cells[k].size(); ++i)
			if (needed.count(detail::sorted(cells[k][i]))) {
				kc.push_back(cells[k][i]);
				km.push_back(meas[k][i]);
			}
		require(kc.size() == needed.size(), ErrorKind::gluing,
		        "assembled mesh is missing level-" + std::to_string(k) + " faces");
		cells[k].swap(kc);
		meas[k].swap(km);
	}
	// compact vertex numbering in order of raw id
	std::vector<char> used(n_raw, 0);
	for (int k = 1; k <= dim_; ++k)
		for (auto &c : cells[k])
			for (int v : c)
				used[v] = 1;
	if (dim_ == 0)
		for (int v = 0; v < n_raw; ++v)
			used[uf_.find(v)] = 1;
	std::vector<int> newid(n_raw, -1);
	int nv = 0;
	for (int v = 0; v < n_raw; ++v)
		if (used[v])
			newid[v] = nv++;
	res.vertex_map.assign(n_raw, -1);
	for (int v = 0; v < n_raw; ++v)
		res.vertex_map[v] = newid[uf_.find(v)];
	m.num_vertices = nv;
	m.corners.assign(dim_ + 1, {});
	m.base_measure.assign(dim_ + 1, {});
	for (int k = 1; k <= dim_; ++k) {
		for (auto &c : cells[k])
			for (int &v : c)
				v = newid[v];
		m.corners[k] = std::move(cells[k]);
		m.base_measure[k] = std::move(meas[k]);
	}
	if (dim_ == 0)
		m.corners[0].clear();
	res.flipped.assign(m.count(dim_), false);

	if (orient == Orient::propagate && dim_ >= 1) {
		// top-cell adjacency through shared facets
		const int nt = m.count(dim_);
		// sign of each incidence, measured against a reference corner order per facet
		std::map<std::vector<int>, Corners> ref;
		std::vector<std::vector<std::pair<int, int>>> adj(nt); // (neighbour, product of signs)
		std::map<std::vector<int>, std::vector<std::pair<int, int>>> users;
		for (int c = 0; c < nt; ++c)
			for (int axis = 0; axis < dim_; ++axis)
				for (int side = 0; side < 2; ++side) {
					Corners fc = detail::cube_face(m.corners[dim_][c], axis, side);
					auto key = detail::sorted(fc);
					auto [it, fresh] = ref.emplace(key, fc);
					int s = detail::cube_face_sign(axis, side) * detail::relative_orientation(it->second, fc);
					users[key].push_back({c, s});
				}
		for (auto &[key, us] : users) {
			if (us.size() > 2)
				fail(ErrorKind::gluing, "facet shared by more than two top cells");
			if (us.size() == 2) {
				adj[us[0].first].push_back({us[1].first, us[0].second * us[1].second});
				adj[us[1].first].push_back({us[0].first, us[0].second * us[1].second});
			}
		}
		// consistent: s_a * o_a == -(s_b * o_b), so o_b = -prod * o_a
		std::vector<int> o(nt, 0);
		std::vector<int> queue;
		auto run = [&](std::size_t head) {
			while (head < queue.size()) {
				int a = queue[head++];
				for (auto [b, prod] : adj[a]) {
					int want = -prod * o[a];
					if (o[b] == 0) {
						if (fixed[b] && want != 1)
							fail(ErrorKind::gluing, "gluing reverses the orientation of a fixed piece");
						o[b] = want;
						queue.push_back(b);
					} else if (o[b] != want) {
						fail(ErrorKind::gluing, "assembled mesh is not orientable");
					}
				}
			}
		};
		for (int c = 0; c < nt; ++c)
			if (fixed[c] && o[c] == 0) {
				o[c] = 1;
				queue.push_back(c);
				run(queue.size() - 1);
			}
		for (int c = 0; c < nt; ++c)
			if (o[c] == 0) {
				o[c] = 1;
				queue.push_back(c);
				run(queue.size() - 1);
			}
		for (int c = 0; c < nt; ++c)
			if (o[c] < 0) {
				m.corners[dim_][c] = detail::reflect_axis0(m.corners[dim_][c]);
				res.flipped[c] = true;
			}
	}
	for (int c = 0; c < m.count(dim_) && dim_ >= 1; ++c)
		for (auto &t : tags[c])
			m.regions[t].push_back(c);
	m.finalize();
	return res;
}

} // namespace karea
