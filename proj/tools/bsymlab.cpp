// bsymlab: batch front door for the b-symplectic integrable-systems lab.
// Subcommands: verify (Definition 3.1 checks), action-angle (period lattice ->
// uniformization -> action/angle chart -> normal-form check), trace (flow CSVs).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "bsym/action_angle.hpp"
#include "bsym/dynamics.hpp"
#include "bsym/errors.hpp"
#include "bsym/gallery.hpp"
#include "bsym/run_io.hpp"

namespace {

namespace fs = std::filesystem;
using namespace bsym;

struct SourceArgs {
    std::string gallery;
    std::string file;
};

void add_source(CLI::App* cmd, SourceArgs& src) {
    auto* g = cmd->add_option("--gallery", src.gallery, "gallery entry, e.g. galilean:b_s1");
    auto* f = cmd->add_option("--file", src.file, "system descriptor JSON");
    g->excludes(f);
}

NCBSystem load_source(const SourceArgs& src) {
    if (!src.gallery.empty()) return gallery::by_name(src.gallery).system;
    if (!src.file.empty()) return load_system_file(src.file);
    throw ParseError("one of --gallery or --file is required");
}

std::string describe_source(const SourceArgs& src) {
    return src.gallery.empty() ? "file:" + src.file : "gallery:" + src.gallery;
}

Point parse_point(const std::string& csv, int dim) {
    Point p;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            p.push_back(std::stod(tok));
        } catch (const std::exception&) {
            throw ParseError("bad --point component \"" + tok + "\"");
        }
    }
    if (static_cast<int>(p.size()) != dim)
        throw ParseError("--point needs " + std::to_string(dim) + " components");
    return p;
}

int cmd_verify(const SourceArgs& src, int samples, std::uint64_t seed, const fs::path& out) {
    const NCBSystem sys = load_source(src);
    VerifyOptions opt;
    opt.samples = samples;
    opt.z_samples = std::max(samples / 2, 20);
    opt.seed = seed;
    const SystemReport rep = verify_system(sys, opt);
    nlohmann::json j = rep.to_json(sys.chart());
    j["schema"] = 1;
    j["source"] = describe_source(src);
    write_report(j, out / "verify_report.json");
    write_run_meta(out / "run_meta.json", "verify " + describe_source(src));
    for (const auto& c : rep.conditions)
        std::cout << "condition (" << c.id << "): " << (c.pass ? "pass" : "FAIL") << "  "
                  << c.detail << "\n";
    return rep.pass ? 0 : 1;
}

int cmd_action_angle(const SourceArgs& src, int samples, std::uint64_t seed, double tol,
                     const fs::path& out) {
    const NCBSystem input = load_source(src);
    std::string stage = "verify";
    try {
        const SystemReport vrep = verify_system(input);
        if (!vrep.pass) {
            write_report(vrep.to_json(input.chart()), out / "verify_report.json");
            std::cerr << "system does not verify; see verify_report.json\n";
            return 1;
        }
        stage = "normal_form";
        const NormalFormResult nf = normal_form(input);

        stage = "period_lattice";
        const LatticeField lattice = build_lattice_field(nf.system);

        stage = "uniformize";
        const UniformizedAction uni = uniformize(nf.system, lattice);

        stage = "action_angle_chart";
        const Section sigma = default_section(nf.system.chart());
        const ActionAngleChart chart =
            build_action_angle_chart(nf.system, uni, nf.defining_function, sigma);

        stage = "verify_normal_form";
        SamplePlan plan(nf.system.chart(), seed);
        const auto pts = plan.take_off_z(samples, 5e-3, 0.2);
        Point z0(static_cast<size_t>(nf.system.chart().dim()), 0.0);
        const PeriodLatticeBasis pl = period_lattice(nf.system, z0);
        const NormalFormReport rep =
            verify_normal_form(nf.system, chart, pts, tol, 1e-6, pl.modular_period);

        nlohmann::json j = rep.to_json();
        j["schema"] = 1;
        j["source"] = describe_source(src);
        j["lattice"] = pl.to_json();
        write_report(j, out / "action_angle_report.json");
        write_report(chart.export_json(), out / "chart.json");
        write_run_meta(out / "run_meta.json", "action-angle " + describe_source(src));
        std::cout << "modular period: " << chart.modular_period
                  << "  normal-form deviation: " << rep.max_deviation << " (tol " << tol << ")\n";
        return rep.pass ? 0 : 1;
    } catch (const NumericsError& e) {
        std::cerr << "pipeline stage '" << stage << "' failed: " << e.what() << "\n";
        return 1;
    }
}

int cmd_trace(const SourceArgs& src, const std::string& point_csv, double time,
              std::uint64_t seed, const fs::path& out) {
    (void)seed;
    const NCBSystem sys = load_source(src);
    const Point p0 = point_csv.empty() ? Point(static_cast<size_t>(sys.chart().dim()), 0.0)
                                       : parse_point(point_csv, sys.chart().dim());
    fs::create_directories(out);
    const int nflows = std::max(sys.rank(), 1);
    for (int i = 0; i < nflows; ++i) {
        Trajectory traj;
        std::string note = "ok";
        try {
            traj = flow(sys.structure(), sys.integral(i), p0, time);
        } catch (const DomainError& e) {
            note = e.what();   // trace keeps the states up to the exit
        }
        const fs::path csv = out / ("trace_f" + std::to_string(i + 1) + ".csv");
        std::ofstream os(csv);
        traj.write_csv(os, sys.chart());
        if (note != "ok") std::cerr << "flow " << i + 1 << ": " << note << "\n";
        std::cout << "wrote " << csv.string() << " (" << traj.times.size() << " rows)\n";
    }
    write_run_meta(out / "run_meta.json", "trace " + describe_source(src));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"b-symplectic non-commutative integrable systems lab"};
    app.require_subcommand(1);

    SourceArgs src;
    int samples = 200;
    std::uint64_t seed = 1;
    double tol = 1e-5;
    double time = 1.0;
    std::string point_csv;
    std::string out_dir = ".";

    auto* verify = app.add_subcommand("verify", "check Definition 3.1 conditions");
    add_source(verify, src);
    verify->add_option("--samples", samples, "sample count");
    verify->add_option("--seed", seed, "sampling seed");
    verify->add_option("--out", out_dir, "output directory");

    auto* aa = app.add_subcommand("action-angle", "construct and verify action-angle coordinates");
    add_source(aa, src);
    aa->add_option("--samples", samples, "verification sample count");
    aa->add_option("--seed", seed, "sampling seed");
    aa->add_option("--tol", tol, "normal-form deviation tolerance");
    aa->add_option("--out", out_dir, "output directory");

    auto* trace = app.add_subcommand("trace", "emit flow trajectories as CSV");
    add_source(trace, src);
    trace->add_option("--point", point_csv, "initial point, comma separated");
    trace->add_option("--time", time, "integration time");
    trace->add_option("--seed", seed, "seed (recorded only)");
    trace->add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (verify->parsed()) return cmd_verify(src, samples, seed, out_dir);
        if (aa->parsed()) return cmd_action_angle(src, samples, seed, tol, out_dir);
        if (trace->parsed()) return cmd_trace(src, point_csv, time, seed, out_dir);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
