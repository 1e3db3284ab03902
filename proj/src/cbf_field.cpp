#include "cbfpred/cbf_field.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace cbfpred {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double d) {
    const std::uint64_t v = std::bit_cast<std::uint64_t>(d);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    void need(std::size_t n) const {
        if (pos + n > buf.size()) throw FormatError("field file: truncated");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i)
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    double f64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i)
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
        pos += 8;
        return std::bit_cast<double>(v);
    }
    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(buf[pos++]);
    }
};

double frac_clamped(double f, int lo, int hi, int& cell) {
    int i = static_cast<int>(std::floor(f));
    if (i < lo) i = lo;
    if (i > hi) i = hi;
    cell = i;
    return std::clamp(f - static_cast<double>(i), 0.0, 1.0);
}

}  // namespace

std::size_t BarrierField::count(NodeFlag f) const {
    std::size_t n = 0;
    for (std::uint8_t b : flags)
        if (b == static_cast<std::uint8_t>(f)) ++n;
    return n;
}

InterpResult BarrierField::interpolate(const State& s) const {
    const GridSpec& g = grid;
    const bool in_range = s.x >= g.x_min && s.x <= g.x_max && s.y >= g.y_min && s.y <= g.y_max;
    const bool have_h = has_scenario || !scenario.obstacles.circles.empty();

    auto surrogate = [&]() -> InterpResult {
        if (!have_h)
            throw OutOfDomainError("field: query outside computed region and no obstacle "
                                   "data available for the fallback value");
        const double hv = scenario.obstacles.h(s);
        if (hv < g.mask_threshold)
            throw OutOfDomainError("field: query outside grid range inside the obstacle band");
        return {delta + (hv - g.mask_threshold), false};
    };

    if (!in_range) return surrogate();

    int ix, iy, ip0;
    const double tx = frac_clamped((s.x - g.x_min) / g.dx(), 0, g.nx - 2, ix);
    const double ty = frac_clamped((s.y - g.y_min) / g.dy(), 0, g.ny - 2, iy);
    double up = (wrap_angle(s.psi) + M_PI) / g.dpsi();
    int ipf = static_cast<int>(std::floor(up));
    if (ipf >= g.npsi) ipf = g.npsi - 1;
    if (ipf < 0) ipf = 0;
    const double tp = std::clamp(up - static_cast<double>(ipf), 0.0, 1.0);
    ip0 = ipf;
    const int ip1 = (ip0 + 1) % g.npsi;

    double corner[8];
    bool any_outside = false, all_outside = true;
    for (int k = 0; k < 8; ++k) {
        const int cx = ix + (k & 1);
        const int cy = iy + ((k >> 1) & 1);
        const int cp = (k & 4) ? ip1 : ip0;
        const std::size_t idx = g.index(cx, cy, cp);
        corner[k] = values[idx];
        const bool outside = flags[idx] == static_cast<std::uint8_t>(NodeFlag::OutsideMask);
        any_outside |= outside;
        all_outside &= outside;
    }
    if (all_outside) return surrogate();

    const double c00 = corner[0] * (1.0 - tx) + corner[1] * tx;
    const double c10 = corner[2] * (1.0 - tx) + corner[3] * tx;
    const double c01 = corner[4] * (1.0 - tx) + corner[5] * tx;
    const double c11 = corner[6] * (1.0 - tx) + corner[7] * tx;
    const double c0 = c00 * (1.0 - ty) + c10 * ty;
    const double c1 = c01 * (1.0 - ty) + c11 * ty;
    return {c0 * (1.0 - tp) + c1 * tp, !any_outside};
}

FieldGradient BarrierField::gradient(const State& s) const {
    FieldGradient out;
    const double hx = 0.5 * grid.dx(), hy = 0.5 * grid.dy(), hp = 0.5 * grid.dpsi();
    const InterpResult center = interpolate(s);
    out.near_mask_boundary = !center.in_mask;

    auto axis = [&](double step, auto shift) -> double {
        bool ok_p = true, ok_m = true;
        InterpResult p{}, m{};
        try {
            p = interpolate(shift(+step));
        } catch (const OutOfDomainError&) {
            ok_p = false;
        }
        try {
            m = interpolate(shift(-step));
        } catch (const OutOfDomainError&) {
            ok_m = false;
        }
        if (ok_p) out.near_mask_boundary |= !p.in_mask;
        if (ok_m) out.near_mask_boundary |= !m.in_mask;
        if (ok_p && ok_m) return (p.value - m.value) / (2.0 * step);
        out.near_mask_boundary = true;
        if (ok_p) return (p.value - center.value) / step;
        if (ok_m) return (center.value - m.value) / step;
        throw OutOfDomainError("field gradient: no valid stencil on one axis");
    };

    out.gx = axis(hx, [&](double d) { return State(s.x + d, s.y, s.psi); });
    out.gy = axis(hy, [&](double d) { return State(s.x, s.y + d, s.psi); });
    out.gpsi = axis(hp, [&](double d) { return State(s.x, s.y, s.psi + d); });
    return out;
}

BarrierField BarrierField::offset(double delta_prime) const {
    if (delta_prime < 0.0 || delta_prime >= delta)
        throw std::out_of_range("field offset: require 0 <= delta_prime < delta");
    BarrierField f = *this;
    for (double& v : f.values) v -= delta_prime;
    f.delta = delta - delta_prime;
    return f;
}

LipschitzReport BarrierField::lipschitz() const {
    LipschitzReport rep;
    const GridSpec& g = grid;
    auto computed = [&](std::size_t i) {
        return flags[i] == static_cast<std::uint8_t>(NodeFlag::Computed);
    };
    for (int ip = 0; ip < g.npsi; ++ip)
        for (int iy = 0; iy < g.ny; ++iy)
            for (int ix = 0; ix < g.nx; ++ix) {
                const std::size_t i = g.index(ix, iy, ip);
                if (!computed(i)) continue;
                if (ix + 1 < g.nx) {
                    const std::size_t j = g.index(ix + 1, iy, ip);
                    if (computed(j))
                        rep.slope_x = std::max(rep.slope_x,
                                               std::abs(values[j] - values[i]) / g.dx());
                }
                if (iy + 1 < g.ny) {
                    const std::size_t j = g.index(ix, iy + 1, ip);
                    if (computed(j))
                        rep.slope_y = std::max(rep.slope_y,
                                               std::abs(values[j] - values[i]) / g.dy());
                }
                const std::size_t j = g.index(ix, iy, (ip + 1) % g.npsi);
                if (computed(j))
                    rep.slope_psi = std::max(rep.slope_psi,
                                             std::abs(values[j] - values[i]) / g.dpsi());
            }
    rep.overall = std::max({rep.slope_x, rep.slope_y, rep.slope_psi});
    return rep;
}

std::string BarrierField::meta_path_for(const std::string& field_path) {
    const std::string ext = ".cbf";
    if (field_path.size() > ext.size() &&
        field_path.compare(field_path.size() - ext.size(), ext.size(), ext) == 0)
        return field_path.substr(0, field_path.size() - ext.size()) + ".meta.json";
    return field_path + ".meta.json";
}

void BarrierField::save(const std::string& path) const {
    if (values.size() != grid.total() || flags.size() != grid.total())
        throw FormatError("field save: storage does not match grid dimensions");
    std::string out;
    out.reserve(4 + 4 + 12 + 8 * 7 + grid.total() * 9);
    out.append("CBF1");
    put_u32(out, 1);
    put_u32(out, static_cast<std::uint32_t>(grid.nx));
    put_u32(out, static_cast<std::uint32_t>(grid.ny));
    put_u32(out, static_cast<std::uint32_t>(grid.npsi));
    put_f64(out, grid.x_min);
    put_f64(out, grid.x_max);
    put_f64(out, grid.y_min);
    put_f64(out, grid.y_max);
    put_f64(out, grid.mask_threshold);
    put_f64(out, delta);
    put_f64(out, horizon.T);
    for (std::size_t i = 0; i < grid.total(); ++i) {
        out.push_back(static_cast<char>(flags[i]));
        put_f64(out, values[i]);
    }
    {
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw FormatError("field save: cannot open '" + path + "'");
        f.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!f) throw FormatError("field save: write failed for '" + path + "'");
    }
    if (has_scenario) {
        nlohmann::json meta;
        meta["format"] = "CBF1.meta";
        meta["scenario"] = nlohmann::json::parse(scenario_to_json(scenario, false));
        meta["scenario_hash"] = scenario_hash_hex(scenario);
        meta["membership_mode_used"] =
            built_mode == MembershipMode::SomeTime ? "some_time" : "terminal";
        std::ofstream m(meta_path_for(path), std::ios::binary | std::ios::trunc);
        if (!m) throw FormatError("field save: cannot open sidecar for '" + path + "'");
        m << meta.dump(2) << "\n";
    }
}

BarrierField BarrierField::load(const std::string& path) {
    std::string buf;
    {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw FormatError("field load: cannot open '" + path + "'");
        std::ostringstream ss;
        ss << f.rdbuf();
        buf = ss.str();
    }
    if (buf.size() < 4 || buf.compare(0, 4, "CBF1") != 0)
        throw VersionError("field load: bad magic, not a CBF1 file");
    Reader r{buf, 4};
    const std::uint32_t version = r.u32();
    if (version != 1)
        throw VersionError("field load: unsupported format version " + std::to_string(version));

    BarrierField f;
    f.grid.nx = static_cast<int>(r.u32());
    f.grid.ny = static_cast<int>(r.u32());
    f.grid.npsi = static_cast<int>(r.u32());
    f.grid.x_min = r.f64();
    f.grid.x_max = r.f64();
    f.grid.y_min = r.f64();
    f.grid.y_max = r.f64();
    f.grid.mask_threshold = r.f64();
    f.delta = r.f64();
    f.horizon.T = r.f64();
    if (f.grid.nx < 2 || f.grid.ny < 2 || f.grid.npsi < 1)
        throw FormatError("field load: implausible grid dimensions");
    const std::size_t total = f.grid.total();
    f.values.resize(total);
    f.flags.resize(total);
    for (std::size_t i = 0; i < total; ++i) {
        const std::uint8_t flag = r.u8();
        if (flag > 2) throw FormatError("field load: invalid node flag");
        f.flags[i] = flag;
        f.values[i] = r.f64();
    }
    if (r.pos != buf.size()) throw FormatError("field load: trailing bytes");

    const std::string meta_path = meta_path_for(path);
    std::ifstream m(meta_path, std::ios::binary);
    if (m) {
        nlohmann::json meta;
        try {
            m >> meta;
        } catch (const nlohmann::json::parse_error& e) {
            throw FormatError(std::string("field load: bad sidecar JSON: ") + e.what());
        }
        if (!meta.contains("scenario"))
            throw FormatError("field load: sidecar missing 'scenario'");
        f.scenario = parse_scenario(meta["scenario"].dump());
        f.has_scenario = true;
        f.horizon = f.scenario.horizon;
        if (meta.value("membership_mode_used", "terminal") == std::string("some_time"))
            f.built_mode = MembershipMode::SomeTime;
        else
            f.built_mode = MembershipMode::Terminal;
    }
    return f;
}

}  // namespace cbfpred
