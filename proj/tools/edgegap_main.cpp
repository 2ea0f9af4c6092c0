// Command-line front end: bands | gaps | edge | flow | fill | decay.
// Reads a JSON config, writes CSV/JSON artifacts, prints a one-line summary.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "edgegap/parallel.hpp"
#include "edgegap/runio.hpp"

namespace {

void print_error_json(const edgegap::Error& e) {
    edgegap::json j;
    j["code"] = e.code();
    j["message"] = e.what();
    if (!e.field().empty()) j["field"] = e.field();
    std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"edge spectra of periodic Schrodinger operators cut at rational angles"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int threads = 0;
    bool no_cache = false;
    app.add_option("--config", config_path, "JSON run configuration")->required();
    app.add_option("--out", out_dir, "output directory (overrides config)");
    app.add_option("--threads", threads, "worker threads (0 = hardware)");
    app.add_flag("--no-cache", no_cache, "disable the artifact cache");

    const char* commands[] = {"bands", "gaps", "edge", "flow", "fill", "decay"};
    for (const char* c : commands) app.add_subcommand(c);

    CLI11_PARSE(app, argc, argv);
    const std::string name = app.get_subcommands().front()->get_name();

    try {
        edgegap::RunConfig cfg = edgegap::load_config(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (threads > 0) cfg.threads = threads;
        if (no_cache) cfg.cache = false;
        return edgegap::run_command(name, cfg);
    } catch (const edgegap::Error& e) {
        print_error_json(e);
        return 1;
    } catch (const std::exception& e) {
        edgegap::json j;
        j["code"] = "internal_error";
        j["message"] = e.what();
        std::cerr << j.dump() << "\n";
        return 2;
    }
}
