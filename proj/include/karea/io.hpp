#pragma once

// Versioned JSON formats for meshes and bundles. Plaquettes list their edges
// in loop order as signed 1-based ids (+e+1 traversed forward, -(e+1)
// backward); 4-cells list their faces the same way with incidence signs. The
// cubical corner lists under "cells" are authoritative on reading.

#include "karea/bundle.hpp"

#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace karea {

using json = nlohmann::ordered_json;

inline constexpr int format_version = 1;
inline constexpr const char *software_version = "0.1.0";

inline std::string hex_hash(std::uint64_t h)
{
	char buf[17];
	std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
	return buf;
}

inline json mesh_to_json(const Mesh &m)
{
	json j;
	j["format"] = "karea-mesh";
	j["version"] = format_version;
	j["dim"] = m.dim;
	j["generator"] = m.generator;
	j["hash"] = hex_hash(m.combinatorial_hash());
	j["vertices"] = m.num_vertices;
	json edges = json::array();
	for (int e = 0; e < m.num_edges(); ++e)
		edges.push_back({m.edge(e)[0], m.edge(e)[1]});
	j["edges"] = std::move(edges);
	json plaq = json::array();
	for (int p = 0; p < m.num_plaquettes(); ++p) {
		json loop = json::array();
		for (auto st : m.plaquette_loop(p))
			loop.push_back(st.forward ? st.edge + 1 : -(st.edge + 1));
		plaq.push_back(std::move(loop));
	}
	j["plaquettes"] = std::move(plaq);
	json c4 = json::array();
	if (m.dim >= 4)
		for (int c = 0; c < m.count(4); ++c) {
			json f = json::array();
			for (auto inc : m.faces(4, c))
				f.push_back(inc.sign > 0 ? inc.face + 1 : -(inc.face + 1));
			c4.push_back(std::move(f));
		}
	j["cells4"] = std::move(c4);
	json len = json::array(), area = json::array();
	for (int e = 0; e < m.num_edges(); ++e)
		len.push_back(m.edge_length(e));
	for (int p = 0; p < m.num_plaquettes(); ++p)
		area.push_back(m.plaquette_area(p));
	j["edge_length"] = std::move(len);
	j["plaquette_area"] = std::move(area);
	json cells = json::object(), meas = json::object();
	for (int k = 1; k <= m.dim; ++k) {
		cells[std::to_string(k)] = m.corners[k];
		json mk = json::array();
		for (int i = 0; i < m.count(k); ++i)
			mk.push_back(m.measure(k, i));
		meas[std::to_string(k)] = std::move(mk);
	}
	j["cells"] = std::move(cells);
	j["measures"] = std::move(meas);
	json regions = json::object();
	for (auto &[name, tops] : m.regions)
		regions[name] = tops;
	j["regions"] = std::move(regions);
	j["boundary"] = m.boundary_facets();
	if (m.collar) {
		const Collar &c = *m.collar;
		j["collar"] = {{"region", c.region}, {"t", c.t}, {"layers", c.layers}, {"anchor", c.anchor}, {"cut_layer", c.cut_layer}};
	} else {
		j["collar"] = nullptr;
	}
	if (!m.periods.empty()) {
		j["periods"] = m.periods;
		j["coords"] = m.coords;
	}
	if (m.factor_a && m.factor_b)
		j["factors"] = {mesh_to_json(*m.factor_a), mesh_to_json(*m.factor_b)};
	return j;
}

inline Mesh mesh_from_json(const json &j)
{
	try {
		require(j.value("format", "") == "karea-mesh", ErrorKind::io, "not a karea mesh document");
		require(j.at("version").get<int>() == format_version, ErrorKind::io, "unsupported mesh format version");
		Mesh m;
		m.dim = j.at("dim").get<int>();
		require(m.dim >= 0 && m.dim <= 4, ErrorKind::io, "mesh dimension out of range");
		m.num_vertices = j.at("vertices").get<int>();
		m.generator = j.value("generator", "");
		m.corners.assign(m.dim + 1, {});
		m.base_measure.assign(m.dim + 1, {});
		m.base_measure[0].assign(m.num_vertices, 1.0);
		for (int k = 1; k <= m.dim; ++k) {
			m.corners[k] = j.at("cells").at(std::to_string(k)).get<std::vector<Corners>>();
			m.base_measure[k] = j.at("measures").at(std::to_string(k)).get<std::vector<double>>();
			require(m.base_measure[k].size() == m.corners[k].size(), ErrorKind::io, "measure table does not match the cells");
			for (double x : m.base_measure[k])
				require(x > 0.0 && std::isfinite(x), ErrorKind::io, "cell measures must be positive");
		}
		for (auto &[name, tops] : j.at("regions").items())
			m.regions[name] = tops.get<std::vector<int>>();
		if (j.contains("collar") && !j["collar"].is_null()) {
			const auto &c = j["collar"];
			Collar col;
			col.region = c.at("region").get<std::string>();
			col.t = c.at("t").get<std::vector<double>>();
			col.layers = c.at("layers").get<std::vector<std::vector<int>>>();
			col.anchor = c.value("anchor", std::vector<int>{});
			col.cut_layer = c.value("cut_layer", -1);
			m.collar = std::move(col);
		}
		if (j.contains("periods")) {
			m.periods = j["periods"].get<std::vector<int>>();
			m.coords = j.at("coords").get<std::vector<std::vector<int>>>();
		}
		if (j.contains("factors")) {
			m.factor_a = std::make_shared<const Mesh>(mesh_from_json(j["factors"].at(0)));
			m.factor_b = std::make_shared<const Mesh>(mesh_from_json(j["factors"].at(1)));
		}
		m.finalize();
		if (j.contains("hash"))
			require(j["hash"].get<std::string>() == hex_hash(m.combinatorial_hash()), ErrorKind::io,
			        "mesh hash does not match its cells");
		return m;
	} catch (const json::exception &e) {
		fail(ErrorKind::io, std::string("malformed mesh document: ") + e.what());
	}
}

inline json bundle_to_json(const Bundle &b)
{
	json j;
	j["format"] = "karea-bundle";
	j["version"] = format_version;
	j["mesh_hash"] = hex_hash(b.base->combinatorial_hash());
	j["rank"] = b.rank;
	json tr = json::array();
	for (const auto &u : b.transport) {
		json rows = json::array();
		for (int i = 0; i < u.rows(); ++i) {
			json row = json::array();
			for (int k = 0; k < u.cols(); ++k)
				row.push_back({u(i, k).real(), u(i, k).imag()});
			rows.push_back(std::move(row));
		}
		tr.push_back(std::move(rows));
	}
	j["transports"] = std::move(tr);
	j["flat_regions"] = b.flat_regions;
	return j;
}

inline Bundle bundle_from_json(const json &j, std::shared_ptr<const Mesh> base)
{
	try {
		require(j.value("format", "") == "karea-bundle", ErrorKind::io, "not a karea bundle document");
		require(j.at("version").get<int>() == format_version, ErrorKind::io, "unsupported bundle format version");
		require(j.at("mesh_hash").get<std::string>() == hex_hash(base->combinatorial_hash()), ErrorKind::io,
		        "bundle was written for a different mesh");
		Bundle b;
		b.base = base;
		b.rank = j.at("rank").get<int>();
		require(b.rank >= 1, ErrorKind::io, "bundle rank must be positive");
		const auto &tr = j.at("transports");
		require(static_cast<int>(tr.size()) == base->num_edges(), ErrorKind::io, "one transport per edge is required");
		b.transport.reserve(tr.size());
		for (const auto &rows : tr) {
			require(static_cast<int>(rows.size()) == b.rank, ErrorKind::io, "transport has the wrong size");
			Mat u(b.rank, b.rank);
			for (int i = 0; i < b.rank; ++i) {
				require(static_cast<int>(rows[i].size()) == b.rank, ErrorKind::io, "transport has the wrong size");
				for (int k = 0; k < b.rank; ++k)
					u(i, k) = cplx(rows[i][k].at(0).get<double>(), rows[i][k].at(1).get<double>());
			}
			require(unitarity_defect(u) <= 1e-12, ErrorKind::io, "transport is not unitary");
			b.transport.push_back(std::move(u));
		}
		b.flat_regions = j.value("flat_regions", std::vector<std::string>{});
		return b;
	} catch (const json::exception &e) {
		fail(ErrorKind::io, std::string("malformed bundle document: ") + e.what());
	}
}

inline json read_json(const std::string &path)
{
	std::ifstream in(path);
	require(in.good(), ErrorKind::io, "cannot open '" + path + "'");
	try {
		return json::parse(in);
	} catch (const json::exception &e) {
		fail(ErrorKind::io, "'" + path + "' is not valid JSON: " + e.what());
	}
}

inline void write_json(const std::string &path, const json &j)
{
	std::ofstream out(path);
	require(out.good(), ErrorKind::io, "cannot write '" + path + "'");
	out << j.dump(2) << '\n';
	require(out.good(), ErrorKind::io, "failed writing '" + path + "'");
}

inline Mesh read_mesh(const std::string &path) { return mesh_from_json(read_json(path)); }

inline Bundle read_bundle(const std::string &path, std::shared_ptr<const Mesh> base)
{
	return bundle_from_json(read_json(path), std::move(base));
}

} // namespace karea
