///
/// \file io.hpp
///
/// Samples CSV and system JSON formats.
///
/// Samples: first line "# p=<p> m=<m>", then one line per point:
/// re_z,im_z followed by 2*p*m reals (re, im interleaved, row-major).
/// Systems: JSON object with "n", "m", "p", "A", "B", "C", "D"; complex
/// entries are [re, im] pairs in row-major nested arrays.
///

#ifndef HNAMOR_IO_HPP
#define HNAMOR_IO_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hnamor/core.hpp"

namespace hnamor
{

class FormatError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Writes through a temporary file in the same directory, then renames.
inline void write_file_atomic(const std::string& path,
                              const std::string& content)
{
    namespace fs      = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
        {
            throw std::runtime_error("cannot open " + tmp.string());
        }
        out << content;
        out.flush();
        if (!out)
        {
            throw std::runtime_error("write failed for " + tmp.string());
        }
    }
    fs::rename(tmp, target);
}

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
    {
        throw std::runtime_error("cannot open " + path);
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string samples_to_csv(const SampleSet& s)
{
    std::string out = "# p=" + std::to_string(s.p()) +
                      " m=" + std::to_string(s.m()) + "\n";
    for (std::size_t i = 0; i < s.size(); ++i)
    {
        out += format_double(s.points[i].real());
        out += ',';
        out += format_double(s.points[i].imag());
        const Matrix& v = s.values[i];
        for (Index r = 0; r < v.rows(); ++r)
        {
            for (Index c = 0; c < v.cols(); ++c)
            {
                out += ',';
                out += format_double(v(r, c).real());
                out += ',';
                out += format_double(v(r, c).imag());
            }
        }
        out += '\n';
    }
    return out;
}

inline SampleSet samples_from_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line))
    {
        throw FormatError("samples: empty input");
    }
    long p = -1;
    long m = -1;
    if (std::sscanf(line.c_str(), "# p=%ld m=%ld", &p, &m) != 2 || p < 1 ||
        m < 1)
    {
        throw FormatError("samples: bad header '" + line + "'");
    }
    SampleSet s;
    const std::size_t width = 2 + 2 * static_cast<std::size_t>(p * m);
    std::size_t lineno      = 1;
    while (std::getline(in, line))
    {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
        {
            line.pop_back();
        }
        if (line.empty())
        {
            continue;
        }
        std::vector<double> vals;
        std::size_t pos = 0;
        while (pos <= line.size())
        {
            const std::size_t comma = line.find(',', pos);
            const std::string tok =
                line.substr(pos, comma == std::string::npos ? std::string::npos
                                                            : comma - pos);
            char* end      = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (tok.empty() || end != tok.c_str() + tok.size())
            {
                throw FormatError("samples: bad number on line " +
                                  std::to_string(lineno));
            }
            vals.push_back(v);
            if (comma == std::string::npos)
            {
                break;
            }
            pos = comma + 1;
        }
        if (vals.size() != width)
        {
            throw FormatError("samples: expected " + std::to_string(width) +
                              " fields on line " + std::to_string(lineno));
        }
        s.points.emplace_back(vals[0], vals[1]);
        Matrix v(p, m);
        std::size_t k = 2;
        for (Index r = 0; r < p; ++r)
        {
            for (Index c = 0; c < m; ++c, k += 2)
            {
                v(r, c) = Complex(vals[k], vals[k + 1]);
            }
        }
        s.values.push_back(std::move(v));
    }
    return s;
}

inline void write_samples(const std::string& path, const SampleSet& s)
{
    write_file_atomic(path, samples_to_csv(s));
}

inline SampleSet read_samples(const std::string& path)
{
    return samples_from_csv(read_file(path));
}

inline nlohmann::json matrix_to_json(const Matrix& M)
{
    nlohmann::json rows = nlohmann::json::array();
    for (Index r = 0; r < M.rows(); ++r)
    {
        nlohmann::json row = nlohmann::json::array();
        for (Index c = 0; c < M.cols(); ++c)
        {
            row.push_back({M(r, c).real(), M(r, c).imag()});
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j, Index rows, Index cols,
                               const char* name)
{
    if (!j.is_array() || static_cast<Index>(j.size()) != rows)
    {
        throw FormatError(std::string("system: bad row count for ") + name);
    }
    Matrix M(rows, cols);
    for (Index r = 0; r < rows; ++r)
    {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Index>(row.size()) != cols)
        {
            throw FormatError(std::string("system: bad column count for ") +
                              name);
        }
        for (Index c = 0; c < cols; ++c)
        {
            const auto& e = row[static_cast<std::size_t>(c)];
            if (!e.is_array() || e.size() != 2)
            {
                throw FormatError(std::string("system: entries of ") + name +
                                  " must be [re, im]");
            }
            M(r, c) = Complex(e[0].get<double>(), e[1].get<double>());
        }
    }
    return M;
}

inline nlohmann::json system_to_json(const StateSpaceSystem& s)
{
    nlohmann::json j;
    j["n"] = s.n();
    j["m"] = s.m();
    j["p"] = s.p();
    j["A"] = matrix_to_json(s.A);
    j["B"] = matrix_to_json(s.B);
    j["C"] = matrix_to_json(s.C);
    j["D"] = matrix_to_json(s.D);
    return j;
}

inline StateSpaceSystem system_from_json(const nlohmann::json& j)
{
    try
    {
        const Index n = j.at("n").get<Index>();
        const Index m = j.at("m").get<Index>();
        const Index p = j.at("p").get<Index>();
        if (n < 0 || m < 1 || p < 1)
        {
            throw FormatError("system: invalid dimensions");
        }
        return StateSpaceSystem(matrix_from_json(j.at("A"), n, n, "A"),
                                matrix_from_json(j.at("B"), n, m, "B"),
                                matrix_from_json(j.at("C"), p, n, "C"),
                                matrix_from_json(j.at("D"), p, m, "D"));
    }
    catch (const nlohmann::json::exception& e)
    {
        throw FormatError(std::string("system: ") + e.what());
    }
}

/// JSON serialization with round-trip precision for doubles.
inline std::string dump_json(const nlohmann::json& j)
{
    return j.dump(2) + "\n";
}

inline void write_system(const std::string& path, const StateSpaceSystem& s)
{
    write_file_atomic(path, dump_json(system_to_json(s)));
}

inline StateSpaceSystem read_system(const std::string& path)
{
    nlohmann::json j;
    try
    {
        j = nlohmann::json::parse(read_file(path));
    }
    catch (const nlohmann::json::parse_error& e)
    {
        throw FormatError(std::string("system: ") + e.what());
    }
    return system_from_json(j);
}

} // namespace hnamor

#endif // HNAMOR_IO_HPP
