#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace detlab {

/// Numeric table written with 17 significant digits, so a value round-trips exactly.
struct CsvTable
{
	std::string name;
	std::vector<std::string> columns;
	std::vector<std::vector<double>> rows;

	void add(std::vector<double> row)
	{
		if (row.size() != columns.size())
			throw std::invalid_argument("csv " + name + ": row width does not match the header");
		rows.push_back(std::move(row));
	}

	std::string str() const
	{
		std::string out;
		for (std::size_t c = 0; c < columns.size(); ++c)
			out += (c ? "," : "") + columns[c];
		out += '\n';
		char buf[40];
		for (const auto& r : rows) {
			for (std::size_t c = 0; c < r.size(); ++c) {
				std::snprintf(buf, sizeof buf, "%.17g", r[c]);
				if (c)
					out += ',';
				out += buf;
			}
			out += '\n';
		}
		return out;
	}

	void write(const std::string& path) const
	{
		std::ofstream f(path, std::ios::binary);
		if (!f)
			throw std::runtime_error("cannot write " + path);
		f << str();
	}
};

/// Reads a numeric CSV with a header row.
inline CsvTable read_csv(const std::string& path)
{
	std::ifstream f(path);
	if (!f)
		throw std::runtime_error("cannot read " + path);
	CsvTable t;
	std::string line;
	if (!std::getline(f, line))
		throw std::runtime_error(path + ": empty file");
	{
		std::stringstream ss(line);
		std::string cell;
		while (std::getline(ss, cell, ','))
			t.columns.push_back(cell);
	}
	int lineno = 1;
	while (std::getline(f, line)) {
		++lineno;
		if (line.empty())
			continue;
		std::vector<double> row;
		std::stringstream ss(line);
		std::string cell;
		while (std::getline(ss, cell, ',')) {
			try {
				row.push_back(std::stod(cell));
			} catch (const std::exception&) {
				throw std::runtime_error(path + ":" + std::to_string(lineno) + ": not a number: " + cell);
			}
		}
		if (row.size() != t.columns.size())
			throw std::runtime_error(path + ":" + std::to_string(lineno) + ": wrong number of fields");
		t.rows.push_back(std::move(row));
	}
	return t;
}

inline std::vector<double> column(const CsvTable& t, const std::string& name)
{
	for (std::size_t c = 0; c < t.columns.size(); ++c)
		if (t.columns[c] == name) {
			std::vector<double> v;
			for (const auto& r : t.rows)
				v.push_back(r[c]);
			return v;
		}
	throw std::runtime_error("no column named " + name);
}

} // namespace detlab
