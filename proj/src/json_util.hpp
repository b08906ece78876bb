#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include <lpsnn/numerics.hpp>

namespace lpsnn::detail {

using nlohmann::json;

template <typename M>
json matrix_to_json(const M &m)
{
	json rows = json::array();
	for (Eigen::Index r = 0; r < m.rows(); ++r) {
		json row = json::array();
		for (Eigen::Index c = 0; c < m.cols(); ++c) {
			row.push_back(m(r, c));
		}
		rows.push_back(std::move(row));
	}
	return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
matrix_from_json(const json &j)
{
	auto rows = j.at("rows").get<Eigen::Index>();
	auto cols = j.at("cols").get<Eigen::Index>();
	Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(rows, cols);
	const json &data = j.at("data");
	if (static_cast<Eigen::Index>(data.size()) != rows) {
		throw DataError("matrix payload row count mismatch");
	}
	for (Eigen::Index r = 0; r < rows; ++r) {
		const json &row = data.at(r);
		if (static_cast<Eigen::Index>(row.size()) != cols) {
			throw DataError("matrix payload column count mismatch");
		}
		for (Eigen::Index c = 0; c < cols; ++c) {
			m(r, c) = row.at(c).get<Scalar>();
		}
	}
	return m;
}

template <typename V>
json vector_to_json(const V &v)
{
	json a = json::array();
	for (Eigen::Index i = 0; i < v.size(); ++i) {
		a.push_back(v(i));
	}
	return a;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> vector_from_json(const json &j)
{
	Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(static_cast<Eigen::Index>(j.size()));
	for (size_t i = 0; i < j.size(); ++i) {
		v(static_cast<Eigen::Index>(i)) = j.at(i).get<Scalar>();
	}
	return v;
}

inline json read_json_file(const std::string &path)
{
	std::ifstream is(path);
	if (!is) {
		throw DataError("cannot open " + path);
	}
	try {
		return json::parse(is);
	}
	catch (const json::exception &e) {
		throw DataError(path + ": " + e.what());
	}
}

inline void write_json_file(const std::string &path, const json &j)
{
	std::ofstream os(path);
	if (!os) {
		throw DataError("cannot write " + path);
	}
	os << j.dump(1) << '\n';
}

}  // namespace lpsnn::detail
