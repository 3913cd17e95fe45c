#include "hrt/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace hrt {

namespace {

template <class T>
void put_le(std::string& buf, T v) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    const U u = std::bit_cast<U>(v);
    for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<char>((u >> (8 * i)) & 0xff));
}

template <class T>
T get_le(const unsigned char* p) {
    using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
    U u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(p[i]) << (8 * i);
    return std::bit_cast<T>(u);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::Io, "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void dump(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorKind::Io, "write failed for " + path);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

double parse_number(const std::string& tok, const std::string& path, std::size_t line) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || trim(tok.substr(used)).size() != 0)
        fail(ErrorKind::Format, path + ":" + std::to_string(line) + ": not a number: '" + trim(tok) + "'");
    return v;
}

// Whitespace-separated tokens of each non-comment line, with line numbers.
std::vector<std::pair<std::size_t, std::vector<std::string>>> token_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open " + path);
    std::vector<std::pair<std::size_t, std::vector<std::string>>> out;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        const auto h = line.find('#');
        if (h != std::string::npos) line.resize(h);
        std::istringstream ss(line);
        std::vector<std::string> toks;
        for (std::string t; ss >> t;) toks.push_back(t);
        if (!toks.empty()) out.emplace_back(n, std::move(toks));
    }
    return out;
}

}  // namespace

void write_rsg(const std::string& path, const Field2& f) {
    f.grid.validate();
    if (f.grid.n1 > 0xffffffffu || f.grid.n2 > 0xffffffffu) fail(ErrorKind::Format, "dimension overflow");
    std::string buf = "RSG1";
    buf.reserve(4 + 8 + 32 + 4 * f.data.size());
    put_le(buf, static_cast<std::uint32_t>(f.grid.n1));
    put_le(buf, static_cast<std::uint32_t>(f.grid.n2));
    put_le(buf, f.grid.o1);
    put_le(buf, f.grid.d1);
    put_le(buf, f.grid.o2);
    put_le(buf, f.grid.d2);
    for (double v : f.data) put_le(buf, static_cast<float>(v));
    dump(path, buf);
}

Field2 read_rsg(const std::string& path) {
    const std::string bytes = slurp(path);
    if (bytes.size() < 44 || bytes.compare(0, 4, "RSG1") != 0) fail(ErrorKind::Format, path + ": bad magic");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    RegularGrid2 g;
    g.n1 = get_le<std::uint32_t>(p + 4);
    g.n2 = get_le<std::uint32_t>(p + 8);
    g.o1 = get_le<double>(p + 12);
    g.d1 = get_le<double>(p + 20);
    g.o2 = get_le<double>(p + 28);
    g.d2 = get_le<double>(p + 36);
    const unsigned long long count = static_cast<unsigned long long>(g.n1) * g.n2;
    if (count > (1ull << 34)) fail(ErrorKind::Format, path + ": dimension overflow");
    if (bytes.size() - 44 < 4 * count) fail(ErrorKind::Format, path + ": truncated payload");
    if (bytes.size() - 44 > 4 * count) fail(ErrorKind::Format, path + ": trailing bytes after payload");
    try {
        g.validate();
    } catch (const Error& e) {
        fail(ErrorKind::Format, path + ": " + e.what());
    }
    Field2 f(g);
    for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] = get_le<float>(p + 44 + 4 * i);
    return f;
}

Field2 read_csv_gather(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open " + path);
    RegularGrid2 g;
    g.o1 = g.o2 = 0.0;
    g.d1 = g.d2 = 1.0;
    std::vector<std::vector<double>> rows;
    std::string line;
    for (std::size_t n = 1; std::getline(in, line); ++n) {
        const std::string t = trim(line);
        if (t.empty()) continue;
        if (t[0] == '#') {
            if (!rows.empty()) continue;
            std::istringstream ss(t.substr(1));
            for (std::string kv; std::getline(ss, kv, ',');) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) continue;
                const std::string key = trim(kv.substr(0, eq));
                const double v = parse_number(kv.substr(eq + 1), path, n);
                if (key == "t0") g.o1 = v;
                else if (key == "dt") g.d1 = v;
                else if (key == "x0") g.o2 = v;
                else if (key == "dx") g.d2 = v;
            }
            continue;
        }
        std::vector<double> row;
        std::istringstream ss(t);
        for (std::string cell; std::getline(ss, cell, ',');) row.push_back(parse_number(cell, path, n));
        if (!rows.empty() && row.size() != rows.front().size())
            fail(ErrorKind::Format, path + ":" + std::to_string(n) + ": ragged row (" + std::to_string(row.size()) +
                                        " cells, expected " + std::to_string(rows.front().size()) + ")");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) fail(ErrorKind::Format, path + ": no data rows");
    g.n1 = rows.size();
    g.n2 = rows.front().size();
    try {
        g.validate();
    } catch (const Error& e) {
        fail(ErrorKind::Format, path + ": " + e.what());
    }
    Field2 f(g);
    for (std::size_t i = 0; i < g.n1; ++i)
        for (std::size_t k = 0; k < g.n2; ++k) f(i, k) = rows[i][k];
    return f;
}

void write_csv_gather(const std::string& path, const Field2& f) {
    std::ostringstream ss;
    ss.precision(9);
    ss << "#t0=" << f.grid.o1 << ",dt=" << f.grid.d1 << ",x0=" << f.grid.o2 << ",dx=" << f.grid.d2 << "\n";
    for (std::size_t i = 0; i < f.grid.n1; ++i) {
        for (std::size_t k = 0; k < f.grid.n2; ++k) ss << (k ? "," : "") << static_cast<float>(f(i, k));
        ss << "\n";
    }
    dump(path, ss.str());
}

void render_pgm(const Field2& f, const std::string& path, double clip_percentile) {
    if (!(clip_percentile > 50.0) || clip_percentile > 100.0) fail(ErrorKind::Config, "clip percentile must be in (50,100]");
    std::vector<double> a(f.data.size());
    std::transform(f.data.begin(), f.data.end(), a.begin(), [](double v) { return std::abs(v); });
    double clip = 0.0;
    if (!a.empty()) {
        const std::size_t k = std::min(a.size() - 1, static_cast<std::size_t>(std::ceil(clip_percentile / 100.0 * static_cast<double>(a.size()))) - 1);
        std::nth_element(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(k), a.end());
        clip = a[k];
    }
    std::string buf = "P5\n" + std::to_string(f.grid.n2) + " " + std::to_string(f.grid.n1) + "\n65535\n";
    for (std::size_t i = 0; i < f.grid.n1; ++i)
        for (std::size_t k = 0; k < f.grid.n2; ++k) {
            double u = 0.5;
            if (clip > 0.0) u = 0.5 * (std::clamp(f(i, k) / clip, -1.0, 1.0) + 1.0);
            const auto v = static_cast<std::uint16_t>(std::lround(u * 65535.0));
            buf.push_back(static_cast<char>(v >> 8));
            buf.push_back(static_cast<char>(v & 0xff));
        }
    dump(path, buf);
}

std::vector<EventSpec> read_event_spec(const std::string& path) {
    std::vector<EventSpec> ev;
    for (const auto& [n, t] : token_lines(path)) {
        if (t.size() != 4 && t.size() != 5)
            fail(ErrorKind::Format, path + ":" + std::to_string(n) + ": expected 'tau0 q0 amp freq [wavelet]'");
        EventSpec e;
        e.tau0 = parse_number(t[0], path, n);
        e.q0 = parse_number(t[1], path, n);
        e.amplitude = parse_number(t[2], path, n);
        e.freq = parse_number(t[3], path, n);
        if (t.size() == 5) {
            if (t[4] == "ricker") e.wavelet = Wavelet::Ricker;
            else if (t[4] == "gauss") e.wavelet = Wavelet::GaussDerivative;
            else fail(ErrorKind::Format, path + ":" + std::to_string(n) + ": unknown wavelet '" + t[4] + "'");
        }
        ev.push_back(e);
    }
    return ev;
}

Polyline read_mute(const std::string& path) {
    Polyline p;
    for (const auto& [n, t] : token_lines(path)) {
        if (t.size() != 2) fail(ErrorKind::Format, path + ":" + std::to_string(n) + ": expected 'tau q'");
        p.tau.push_back(parse_number(t[0], path, n));
        p.q.push_back(parse_number(t[1], path, n));
        if (p.tau.size() > 1 && !(p.tau.back() > p.tau[p.tau.size() - 2]))
            fail(ErrorKind::Format, path + ":" + std::to_string(n) + ": tau must increase strictly");
    }
    if (p.tau.empty()) fail(ErrorKind::Format, path + ": empty mute polyline");
    return p;
}

std::vector<unsigned char> read_mask(const std::string& path) {
    std::vector<unsigned char> m;
    for (const auto& [n, t] : token_lines(path)) {
        if (t.size() != 1 || (t[0] != "0" && t[0] != "1"))
            fail(ErrorKind::Format, path + ":" + std::to_string(n) + ": expected 0 or 1");
        m.push_back(t[0] == "1");
    }
    return m;
}

void write_mask(const std::string& path, const std::vector<unsigned char>& mask) {
    std::string s;
    for (unsigned char v : mask) s += v ? "1\n" : "0\n";
    dump(path, s);
}

}  // namespace hrt
