#include "edgegap/runio.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "edgegap/parallel.hpp"

namespace edgegap {

namespace {

constexpr const char* kVersion = "edgegap 1.0";

std::string fmtg(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

Boundary parse_boundary(const std::string& s) {
    if (s == "dislocated") return Boundary::Dislocated;
    if (s == "dirichlet") return Boundary::Dirichlet;
    if (s == "domain_wall") return Boundary::DomainWall;
    throw Error("bad_boundary", "boundary must be dislocated|dirichlet|domain_wall", "boundary");
}

std::string header_lines(const json& header) {
    std::string out = "# ";
    out += kVersion;
    out += "\n# config ";
    out += header.dump();
    out += "\n";
    return out;
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
    RunConfig c;
    if (j.contains("potential")) {
        const auto& p = j.at("potential");
        c.potential.family = p.value("family", "zero");
        c.potential.amplitude = p.value("amplitude", 4.0);
        c.potential.depth = p.value("depth", -10.0);
        c.potential.width = p.value("width", 0.15);
        if (p.contains("coeffs_csv"))
            c.potential.coeffs = read_fourier_csv(p.at("coeffs_csv").get<std::string>());
        if (p.contains("coeffs"))
            for (const auto& e : p.at("coeffs"))
                c.potential.coeffs.push_back(
                    {{e.at(0).get<int>(), e.at(1).get<int>()},
                     {e.at(2).get<double>(), e.size() > 3 ? e.at(3).get<double>() : 0.0}});
    }
    if (j.contains("angle"))
        c.angle = RationalAngle(j.at("angle").value("p", 0), j.at("angle").value("q", 1));
    c.alpha = j.value("alpha", "");
    c.n_convergents = j.value("n_convergents", 5);
    if (j.contains("gap")) {
        const auto& g = j.at("gap");
        if (g.contains("a") && g.contains("b"))
            c.gap_explicit = {{g.at("a").get<double>(), g.at("b").get<double>()}};
        else
            c.gap_index = g.value("index", 0);
    }
    c.cutoff = j.value("cutoff", 10);
    c.grid_size = j.value("grid_size", 16);
    c.n_bands = j.value("n_bands", 12);
    c.X = j.value("X", 0.0);
    c.h = j.value("h", 0.0);
    c.k = j.value("k", 0.0);
    c.t = j.value("t", 0.0);
    c.boundary = j.value("boundary", "dislocated");
    c.k_samples = j.value("k_samples", 8);
    c.t_samples = j.value("t_samples", 16);
    c.nonzero_budget = j.value("nonzero_budget", 200000LL);
    if (j.contains("window"))
        c.window = {{j.at("window").at("lo").get<double>(), j.at("window").at("hi").get<double>()}};
    c.out_dir = j.value("out", "out");
    c.cache = j.value("cache", true);
    c.threads = j.value("threads", 0);
    return c;
}

json RunConfig::to_json() const {
    json j;
    json p;
    p["family"] = potential.family;
    p["amplitude"] = potential.amplitude;
    p["depth"] = potential.depth;
    p["width"] = potential.width;
    if (!potential.coeffs.empty()) {
        json cs = json::array();
        for (const auto& e : potential.coeffs)
            cs.push_back({e.G[0], e.G[1], e.v.real(), e.v.imag()});
        p["coeffs"] = cs;
    }
    j["potential"] = p;
    if (angle) j["angle"] = {{"p", angle->p}, {"q", angle->q}};
    if (!alpha.empty()) j["alpha"] = alpha;
    j["n_convergents"] = n_convergents;
    if (gap_explicit)
        j["gap"] = {{"a", gap_explicit->first}, {"b", gap_explicit->second}};
    else
        j["gap"] = {{"index", gap_index}};
    j["cutoff"] = cutoff;
    j["grid_size"] = grid_size;
    j["n_bands"] = n_bands;
    j["X"] = X;
    j["h"] = h;
    j["k"] = k;
    j["t"] = t;
    j["boundary"] = boundary;
    j["k_samples"] = k_samples;
    j["t_samples"] = t_samples;
    j["nonzero_budget"] = nonzero_budget;
    if (window) j["window"] = {{"lo", window->first}, {"hi", window->second}};
    j["cache"] = cache;
    return j;
}

void RunConfig::validate() const {
    std::vector<std::string> bad;
    if (potential.family != "zero" && potential.family != "cosine2d" &&
        potential.family != "gaussian_bumps" && potential.family != "fourier")
        bad.push_back("potential.family");
    if (potential.family == "gaussian_bumps" && potential.width <= 0) bad.push_back("potential.width");
    if (cutoff < 1) bad.push_back("cutoff");
    if (grid_size < 2) bad.push_back("grid_size");
    if (n_bands < 1) bad.push_back("n_bands");
    if (k_samples < 1) bad.push_back("k_samples");
    if (t_samples < 1) bad.push_back("t_samples");
    if (n_convergents < 1) bad.push_back("n_convergents");
    if (nonzero_budget < 1) bad.push_back("nonzero_budget");
    if (boundary != "dislocated" && boundary != "dirichlet" && boundary != "domain_wall")
        bad.push_back("boundary");
    if (gap_explicit && gap_explicit->second <= gap_explicit->first) bad.push_back("gap");
    if (window && window->second <= window->first) bad.push_back("window");
    if (angle) {
        const double L = angle->L();
        if (X > 0 && X < 5 * L - 1e-9) bad.push_back("X");
        if (h > 0 && h > L / 16 + 1e-12) bad.push_back("h");
    }
    if (!bad.empty()) {
        std::string fields;
        for (size_t i = 0; i < bad.size(); ++i) fields += (i ? "," : "") + bad[i];
        throw Error("invalid_config", "invalid config fields: " + fields, fields);
    }
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("io_error", "cannot open config: " + path, "config");
    json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error("bad_json", std::string("config parse error: ") + e.what(), "config");
    }
    return RunConfig::from_json(j);
}

std::string cache_key(const json& fragment) {
    const std::string s = fragment.dump();
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::create_directories(path.parent_path());
    std::random_device rd;
    const auto tmp = path.string() + ".tmp" + std::to_string(rd() % 1000000);
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw Error("io_error", "cannot write " + tmp);
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

std::string bands_to_csv(const BandStructure& bs, const json& header) {
    std::ostringstream os;
    os << header_lines(header);
    os << "k1,k2,band_index,energy\n";
    for (int i1 = 0; i1 < bs.grid_size(); ++i1)
        for (int i2 = 0; i2 < bs.grid_size(); ++i2)
            for (int n = 0; n < bs.n_bands(); ++n)
                os << fmtg(bs.k_at(i1)) << ',' << fmtg(bs.k_at(i2)) << ',' << n + 1 << ','
                   << fmtg(bs.energy(i1, i2, n)) << '\n';
    return os.str();
}

json gaps_to_json(const std::vector<SpectralGap>& gaps) {
    json out = json::array();
    for (const auto& g : gaps) out.push_back({{"a", g.a}, {"b", g.b}, {"n_below", g.n_below}});
    return out;
}

std::string fiber_to_csv(const FiberSpectrum& fs, const json& header) {
    std::ostringstream os;
    os << header_lines(header);
    os << "t,k,energy,weight_near_cut,weight_far_boundary,spurious_flag,in_gap_flag\n";
    for (const auto& s : fs.states)
        os << fmtg(fs.spec.t) << ',' << fmtg(fs.spec.k) << ',' << fmtg(s.energy) << ','
           << fmtg(s.weight_near_cut) << ',' << fmtg(s.weight_far_boundary) << ','
           << (s.spurious ? 1 : 0) << ',' << (s.in_gap ? 1 : 0) << '\n';
    return os.str();
}

json flow_to_json(const FlowVerification& fv) {
    json j;
    j["angle"] = {{"p", fv.angle.p}, {"q", fv.angle.q}};
    j["boundary"] = to_string(fv.boundary);
    j["k"] = fv.k;
    j["period"] = fv.period;
    j["expected_flow"] = fv.expected_flow;
    j["measured_flow"] = fv.measured_flow;
    j["pass"] = fv.pass;
    j["reference_energy"] = fv.detail.reference_energy;
    j["branch_count"] = fv.branch_count;
    j["t_samples"] = fv.t_samples;
    json cs = json::array();
    for (const auto& c : fv.detail.crossings)
        cs.push_back({{"t", c.t}, {"branch_id", c.branch_id}, {"direction", c.down ? "down" : "up"}});
    j["crossings"] = cs;
    return j;
}

std::string crossings_to_csv(const FlowResult& fr, const json& header) {
    std::ostringstream os;
    os << header_lines(header);
    os << "t,branch_id,direction\n";
    for (const auto& c : fr.crossings)
        os << fmtg(c.t) << ',' << c.branch_id << ',' << (c.down ? "down" : "up") << '\n';
    return os.str();
}

json fill_to_json(const FillReport& fr) {
    json j;
    j["alpha"] = fr.alpha;
    j["gap"] = {{"a", fr.gap.a}, {"b", fr.gap.b}, {"n_below", fr.gap.n_below}};
    j["n_unrotated"] = fr.n_unrotated;
    j["nu"] = fr.nu;
    if (!fr.note.empty()) j["note"] = fr.note;
    json rs = json::array();
    for (const auto& r : fr.records) {
        json rec;
        rec["angle"] = {{"p", r.angle.p}, {"q", r.angle.q}};
        rec["L"] = r.L;
        rec["max_free_subinterval_length"] = r.max_free_subinterval;
        rec["eigenvalue_count"] = r.eigenvalue_count;
        rec["lower_bound"] = r.lower_bound;
        rec["truncated"] = r.truncated;
        rec["aggregated_states"] = r.energies.size();
        rs.push_back(rec);
    }
    j["records"] = rs;
    return j;
}

std::string fill_to_csv(const FillReport& fr, const json& header) {
    std::ostringstream os;
    os << header_lines(header);
    os << "L,t,k,energy\n";
    for (const auto& r : fr.records)
        for (size_t i = 0; i < r.energies.size(); ++i)
            os << fmtg(r.L) << ',' << fmtg(r.t_values[i]) << ',' << fmtg(r.k_values[i]) << ','
               << fmtg(r.energies[i]) << '\n';
    return os.str();
}

void save_bands_cache(const std::filesystem::path& dir, const std::string& key,
                      const BandStructure& bs) {
    std::ostringstream os;
    os << bs.grid_size() << ',' << bs.n_bands() << ',' << bs.cutoff() << '\n';
    const auto& m = bs.raw_bands();
    for (int r = 0; r < m.rows(); ++r) {
        for (int c = 0; c < m.cols(); ++c) os << (c ? "," : "") << fmtg(m(r, c));
        os << '\n';
    }
    write_file_atomic(dir / (key + ".bands"), os.str());
}

std::optional<BandStructure> load_bands_cache(const std::filesystem::path& dir,
                                              const std::string& key,
                                              const PeriodicPotential& V,
                                              const RationalAngle& angle) {
    std::ifstream in(dir / (key + ".bands"));
    if (!in) return std::nullopt;
    std::string line;
    if (!std::getline(in, line)) return std::nullopt;
    int gs = 0, nb = 0, co = 0;
    if (std::sscanf(line.c_str(), "%d,%d,%d", &gs, &nb, &co) != 3) return std::nullopt;
    BandStructure bs(V, angle, gs, nb, co);
    for (int r = 0; r < gs * gs; ++r) {
        if (!std::getline(in, line)) return std::nullopt;
        std::stringstream ss(line);
        std::string tok;
        for (int c = 0; c < nb; ++c) {
            if (!std::getline(ss, tok, ',')) return std::nullopt;
            bs.raw_bands()(r, c) = std::stod(tok);
        }
    }
    return bs;
}

namespace {

struct Pipeline {
    RunConfig cfg;
    PeriodicPotential V;
    std::filesystem::path out;
    std::filesystem::path cache_dir;

    explicit Pipeline(const RunConfig& c) : cfg(c), out(c.out_dir), cache_dir(out / "cache") {
        V = make_potential(cfg.potential);
        std::filesystem::create_directories(out);
    }

    RationalAngle angle() const {
        if (cfg.angle) return *cfg.angle;
        if (!cfg.alpha.empty())
            return continued_fraction_convergents(cfg.alpha, 1).convergents.at(0);
        return RationalAngle(0, 1);
    }

    json bands_fragment(const RationalAngle& a) const {
        json f = cfg.to_json().at("potential");
        json out;
        out["potential"] = f;
        out["angle"] = {{"p", a.p}, {"q", a.q}};
        out["grid_size"] = cfg.grid_size;
        out["n_bands"] = cfg.n_bands;
        out["cutoff"] = cfg.cutoff;
        return out;
    }

    BandStructure bands(const RationalAngle& a) const {
        const std::string key = cache_key(bands_fragment(a));
        if (cfg.cache)
            if (auto hit = load_bands_cache(cache_dir, key, V, a)) return *hit;
        BandStructure bs = compute_bands(V, a, cfg.grid_size, cfg.n_bands, cfg.cutoff);
        if (cfg.cache) save_bands_cache(cache_dir, key, bs);
        return bs;
    }

    // window covering everything the computed bands can certify
    std::pair<double, double> default_window(const BandStructure& bs) const {
        return {bs.band_min(0) - 1.0, bs.band_max(bs.n_bands() - 1) - 1e-9};
    }

    std::optional<SpectralGap> select_gap(const BandStructure& bs) const {
        if (cfg.gap_explicit) {
            SpectralGap g{cfg.gap_explicit->first, cfg.gap_explicit->second, 0};
            try {
                g.n_below = bands_below(bs, g.mid());
            } catch (const Error&) {
                g.n_below = -1;  // explicit window not certified by the bands
            }
            return g;
        }
        const auto [lo, hi] = default_window(bs);
        const auto gaps = find_gaps(bs, lo, hi);
        if (gaps.empty()) return std::nullopt;
        if (cfg.gap_index < 0 || cfg.gap_index >= static_cast<int>(gaps.size()))
            throw Error("bad_gap_index", "gap index out of range; found " +
                                             std::to_string(gaps.size()) + " gap(s)", "gap");
        return gaps[cfg.gap_index];
    }

    FiberSpec fiber_spec(const RationalAngle& a) const {
        FiberSpec sp;
        sp.potential = V;
        sp.angle = a;
        sp.t = cfg.t;
        sp.k = cfg.k;
        sp.boundary = parse_boundary(cfg.boundary);
        sp.X = cfg.X;
        sp.h = cfg.h;
        sp.apply_defaults();
        return sp;
    }
};

}  // namespace

int run_command(const std::string& name, const RunConfig& config) {
    config.validate();
    if (config.threads > 0) set_default_threads(config.threads);
    Pipeline pl(config);
    const json hdr = [&] {
        json h = config.to_json();
        h["command"] = name;
        return h;
    }();

    if (name == "bands") {
        const auto a = pl.angle();
        const BandStructure bs = pl.bands(a);
        write_file_atomic(pl.out / "bands.csv", bands_to_csv(bs, hdr));
        std::cout << "bands: " << bs.grid_size() << "x" << bs.grid_size() << " k-grid, "
                  << bs.n_bands() << " bands, range [" << fmtg(bs.band_min(0)) << ", "
                  << fmtg(bs.band_max(bs.n_bands() - 1)) << "] -> "
                  << (pl.out / "bands.csv").string() << "\n";
        return 0;
    }

    if (name == "gaps") {
        const auto a = pl.angle();
        const BandStructure bs = pl.bands(a);
        const auto [lo, hi] = pl.default_window(bs);
        const auto gaps = find_gaps(bs, lo, hi);
        json j;
        j["config"] = hdr;
        j["window"] = {{"lo", lo}, {"hi", hi}};
        j["gaps"] = gaps_to_json(gaps);
        write_file_atomic(pl.out / "gaps.json", j.dump(2) + "\n");
        std::cout << "gaps: " << gaps.size() << " gap(s) in (" << fmtg(lo) << ", " << fmtg(hi)
                  << ") -> " << (pl.out / "gaps.json").string() << "\n";
        return 0;
    }

    if (name == "edge") {
        const auto a = pl.angle();
        const BandStructure bs = pl.bands(a);
        const auto gap = pl.select_gap(bs);
        double wlo, whi;
        if (config.window) {
            wlo = config.window->first;
            whi = config.window->second;
        } else if (gap) {
            wlo = gap->a;
            whi = gap->b;
        } else {
            throw Error("no_gap", "no spectral gap found and no explicit window given", "window");
        }
        FiberSpec sp = pl.fiber_spec(a);
        SolveOptions so;
        so.gap = gap;
        so.keep_vectors = false;
        const json frag = [&] {
            json f = hdr;
            f["window"] = {{"lo", wlo}, {"hi", whi}};
            return f;
        }();
        const std::string key = cache_key(frag);
        const auto cpath = pl.cache_dir / (key + ".fiber");
        FiberSpectrum fs;
        bool from_cache = false;
        if (config.cache && std::filesystem::exists(cpath)) {
            std::ifstream in(cpath);
            json jj;
            in >> jj;
            fs.spec = sp;
            for (const auto& s : jj.at("states"))
                fs.states.push_back({s.at("energy").get<double>(),
                                     s.at("weight_near_cut").get<double>(),
                                     s.at("weight_far_boundary").get<double>(),
                                     s.at("spurious").get<bool>(), s.at("in_gap").get<bool>()});
            from_cache = true;
        } else {
            fs = solve_fiber(sp, wlo, whi, so);
            if (config.cache) {
                json jj;
                jj["states"] = json::array();
                for (const auto& s : fs.states)
                    jj["states"].push_back({{"energy", s.energy},
                                            {"weight_near_cut", s.weight_near_cut},
                                            {"weight_far_boundary", s.weight_far_boundary},
                                            {"spurious", s.spurious},
                                            {"in_gap", s.in_gap}});
                write_file_atomic(cpath, jj.dump() + "\n");
            }
        }
        write_file_atomic(pl.out / "fiber.csv", fiber_to_csv(fs, hdr));
        int ingap = 0;
        for (const auto& s : fs.states) ingap += s.in_gap ? 1 : 0;
        std::cout << "edge: " << fs.states.size() << " state(s) in (" << fmtg(wlo) << ", "
                  << fmtg(whi) << "), " << ingap << " in-gap"
                  << (from_cache ? " [cache]" : "") << " -> " << (pl.out / "fiber.csv").string()
                  << "\n";
        return 0;
    }

    if (name == "flow") {
        const auto a = pl.angle();
        const BandStructure bs_rot = pl.bands(a);
        const auto gap = pl.select_gap(bs_rot);
        if (!gap) {
            json j;
            j["config"] = hdr;
            j["measured_flow"] = 0;
            j["note"] = "no spectral gap: no gap states";
            write_file_atomic(pl.out / "flow.json", j.dump(2) + "\n");
            std::cout << "flow = 0 (no gap states)\n";
            return 0;
        }
        // N(E) on the unrotated lattice
        const BandStructure bs0 = pl.bands(RationalAngle(0, 1));
        const int n_unrot = bands_below(bs0, gap->mid());
        TrackOptions topts;
        FlowVerification fv = verify_flow_theorem(pl.V, a, *gap, config.k,
                                                  parse_boundary(config.boundary), n_unrot, topts);
        json j = flow_to_json(fv);
        j["config"] = hdr;
        write_file_atomic(pl.out / "flow.json", j.dump(2) + "\n");
        write_file_atomic(pl.out / "crossings.csv", crossings_to_csv(fv.detail, hdr));
        std::cout << "flow = " << fv.measured_flow << " (expected " << fv.expected_flow << ") "
                  << (fv.pass ? "PASS" : "FAIL") << " -> " << (pl.out / "flow.json").string()
                  << "\n";
        return fv.pass ? 0 : 3;
    }

    if (name == "fill") {
        if (config.alpha.empty())
            throw Error("bad_alpha", "fill requires alpha (decimal string)", "alpha");
        const BandStructure bs0 = pl.bands(RationalAngle(0, 1));
        const auto gap = pl.select_gap(bs0);
        if (!gap) throw Error("no_gap", "no spectral gap found for the fill sweep", "gap");
        const int n_unrot = bands_below(bs0, gap->mid());
        FillOptions fo;
        fo.k_samples = config.k_samples;
        fo.t_samples = config.t_samples;
        fo.nonzero_budget = config.nonzero_budget;
        fo.h = config.h;
        const std::string key = cache_key(hdr);
        const auto cpath = pl.cache_dir / (key + ".fill");
        FillReport fr;
        if (config.cache && std::filesystem::exists(cpath)) {
            std::ifstream in(cpath);
            json jj;
            in >> jj;
            fr.alpha = config.alpha;
            fr.gap = *gap;
            fr.n_unrotated = n_unrot;
            fr.nu = pl.V.lipschitz_nu();
            fr.note = jj.value("note", "");
            for (const auto& r : jj.at("records")) {
                FillRecord rec;
                rec.angle = RationalAngle(r.at("p").get<int>(), r.at("q").get<int>());
                rec.L = rec.angle.L();
                rec.energies = r.at("energies").get<std::vector<double>>();
                rec.t_values = r.at("t_values").get<std::vector<double>>();
                rec.k_values = r.at("k_values").get<std::vector<double>>();
                rec.max_free_subinterval = r.at("max_free").get<double>();
                rec.eigenvalue_count = r.at("count").get<int>();
                rec.lower_bound = r.at("lower_bound").get<int>();
                rec.truncated = r.at("truncated").get<bool>();
                fr.records.push_back(std::move(rec));
            }
        } else {
            fr = approximant_sweep(pl.V, config.alpha, config.n_convergents, *gap, n_unrot, fo);
            if (config.cache) {
                json jj;
                jj["note"] = fr.note;
                jj["records"] = json::array();
                for (const auto& r : fr.records)
                    jj["records"].push_back({{"p", r.angle.p},
                                             {"q", r.angle.q},
                                             {"energies", r.energies},
                                             {"t_values", r.t_values},
                                             {"k_values", r.k_values},
                                             {"max_free", r.max_free_subinterval},
                                             {"count", r.eigenvalue_count},
                                             {"lower_bound", r.lower_bound},
                                             {"truncated", r.truncated}});
                write_file_atomic(cpath, jj.dump() + "\n");
            }
        }
        json j = fill_to_json(fr);
        j["config"] = hdr;
        write_file_atomic(pl.out / "fill.json", j.dump(2) + "\n");
        write_file_atomic(pl.out / "fill.csv", fill_to_csv(fr, hdr));
        std::cout << "fill: " << fr.records.size() << " convergent record(s)"
                  << (fr.note.empty() ? "" : " (truncated)") << " -> "
                  << (pl.out / "fill.json").string() << "\n";
        return 0;
    }

    if (name == "decay") {
        const auto a = pl.angle();
        const BandStructure bs = pl.bands(a);
        const auto gap = pl.select_gap(bs);
        if (!gap) throw Error("no_gap", "no spectral gap found for decay fits", "gap");
        FiberSpec sp = pl.fiber_spec(a);
        SolveOptions so;
        so.gap = gap;
        so.keep_vectors = true;
        const FiberSpectrum fs = solve_fiber(sp, gap->a, gap->b, so);
        std::ostringstream os;
        os << header_lines(hdr);
        os << "energy,alpha_fit,r_squared\n";
        int fitted = 0;
        for (size_t i = 0; i < fs.states.size(); ++i) {
            if (!fs.states[i].in_gap) continue;
            const DecayFit fit = fit_decay_rate(sp, fs.vectors.col(i));
            os << fmtg(fs.states[i].energy) << ',' << fmtg(fit.alpha_fit) << ','
               << fmtg(fit.r_squared) << '\n';
            ++fitted;
        }
        write_file_atomic(pl.out / "decay.csv", os.str());
        std::cout << "decay: " << fitted << " in-gap state(s) fitted -> "
                  << (pl.out / "decay.csv").string() << "\n";
        return 0;
    }

    throw Error("unknown_command", "unknown command: " + name, "command");
}

}  // namespace edgegap
