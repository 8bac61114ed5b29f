#include "dtrti/csvio.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dtrti::csvio {

namespace {

const char* kTrajectoryHeader = "s1,a1,s2,a2,y";

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& msg) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": " + msg);
}

double parse_double(const std::string& s, std::size_t line_no, const char* name) {
    if (s.empty()) fail(line_no, std::string("missing field ") + name);
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        fail(line_no, std::string("cannot parse ") + name + " from '" + s + "'");
    }
    if (pos != s.size()) fail(line_no, std::string("trailing characters in ") + name + ": '" + s + "'");
    if (!std::isfinite(v)) fail(line_no, std::string(name) + " must be finite");
    return v;
}

int parse_binary(const std::string& s, std::size_t line_no, const char* name) {
    const double v = parse_double(s, line_no, name);
    if (v != 0.0 && v != 1.0) fail(line_no, std::string(name) + " must be 0 or 1, got '" + s + "'");
    return static_cast<int>(v);
}

} // namespace

std::string format_num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

void write_trajectories(std::ostream& os, std::span<const dtr::Trajectory> data) {
    os << kTrajectoryHeader << '\n';
    for (const dtr::Trajectory& t : data) {
        os << t.s1 << ',' << t.a1 << ',' << format_num(t.s2) << ',' << t.a2 << ','
           << format_num(t.y) << '\n';
    }
}

std::vector<dtr::Trajectory> read_trajectories(std::istream& is) {
    std::vector<dtr::Trajectory> out;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        if (!header_seen) {
            if (line != kTrajectoryHeader) {
                fail(line_no, std::string("expected header '") + kTrajectoryHeader + "', got '" + line + "'");
            }
            header_seen = true;
            continue;
        }
        const auto fields = split_fields(line);
        if (fields.size() != 5) {
            fail(line_no, "expected 5 fields, got " + std::to_string(fields.size()));
        }
        dtr::Trajectory t;
        t.s1 = parse_binary(fields[0], line_no, "s1");
        t.a1 = parse_binary(fields[1], line_no, "a1");
        t.s2 = parse_double(fields[2], line_no, "s2");
        t.a2 = parse_binary(fields[3], line_no, "a2");
        t.y = parse_double(fields[4], line_no, "y");
        out.push_back(t);
    }
    if (!header_seen) throw std::runtime_error("line 1: missing header '" + std::string(kTrajectoryHeader) + "'");
    return out;
}

std::vector<dtr::Trajectory> read_trajectories_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    return read_trajectories(in);
}

void write_trajectories_file(const std::string& path, std::span<const dtr::Trajectory> data) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    write_trajectories(out, data);
    if (!out.good()) throw std::runtime_error("write failed: " + path);
}

} // namespace dtrti::csvio
