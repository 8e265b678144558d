#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "certify/pipeline.hpp"

using namespace certify;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << text;
}

struct CommonArgs {
    std::string system_path;
    std::string config_path;
    std::vector<std::string> overrides;  // key=value pairs from flags
};

void add_common(CLI::App* cmd, CommonArgs& args, RunConfig& cfg) {
    cmd->add_option("system", args.system_path, "system definition file")->required();
    cmd->add_option("--config", args.config_path, "flat key=value config file");
    cmd->add_option("--mode", cfg.mode, "stability|dissipativity|passivity|ofp|ifp|qsr|l2gain");
    cmd->add_option("--approx", cfg.approx, "auto|exact|taylor|bernstein");
    cmd->add_option("--order", cfg.order, "taylor order k");
    cmd->add_option("--mu", cfg.mu, "bernstein degree per variable");
    cmd->add_option("--variant", cfg.variant, "taylor error handling: box|ellipsoid");
    cmd->add_option("--vdeg", cfg.vdeg, "storage function degree");
    cmd->add_option("--sdeg", cfg.sdeg, "region multiplier degree");
    cmd->add_option("--edeg", cfg.edeg, "error multiplier degree (-1 = auto)");
    cmd->add_option("--tol", cfg.tol, "solver tolerance");
    cmd->add_option("--max-iter", cfg.max_iter, "solver iteration cap");
    cmd->add_option("--gram-cap", cfg.gram_cap, "total Gram dimension cap");
    cmd->add_option("--seed", cfg.seed, "validation sampling seed");
    cmd->add_option("--samples", cfg.samples, "validation sample count");
    cmd->add_option("--berr", cfg.berr, "bernstein error mode: lipschitz|empirical");
    cmd->add_option("--remainder", cfg.remainder, "taylor remainder mode: per-beta|uniform");
    cmd->add_option("--subdivisions", cfg.subdivisions, "remainder bound subdivisions");
    cmd->add_option("--radius", cfg.radius, "replace the region by the 2-norm ball");
    cmd->add_option("--rho", cfg.rho, "fixed OFP index");
    cmd->add_option("--nu", cfg.nu, "fixed IFP index");
    cmd->add_option("--gamma", cfg.gamma, "L2 gain");
    cmd->add_option("--qsr", cfg.qsr, "QSR supply matrices as Q|S|R");
    cmd->add_option("--out", cfg.out, "output path");
    cmd->add_flag("--bisection", cfg.bisection, "force the index bisection fallback");
}

// precedence: defaults < system option lines < config file < flags
RunConfig merge_config(const CLI::App* cmd, const CommonArgs& args, const RunConfig& flags) {
    RunConfig cfg;  // defaults
    try {
        const SystemModel peek = parse_system(read_file(args.system_path));
        for (const auto& [key, value] : peek.options) apply_config_line(cfg, key, value);
    } catch (const ParseError&) {
        // the command body reports parse errors with proper diagnostics
    }
    if (!args.config_path.empty()) apply_config_file(cfg, args.config_path);
    // overlay explicit flags
    RunConfig merged = cfg;
    auto passed = [&](const char* name) { return cmd->count(name) > 0; };
    if (passed("--mode")) merged.mode = flags.mode;
    if (passed("--approx")) merged.approx = flags.approx;
    if (passed("--order")) merged.order = flags.order;
    if (passed("--mu")) merged.mu = flags.mu;
    if (passed("--variant")) merged.variant = flags.variant;
    if (passed("--vdeg")) merged.vdeg = flags.vdeg;
    if (passed("--sdeg")) merged.sdeg = flags.sdeg;
    if (passed("--edeg")) merged.edeg = flags.edeg;
    if (passed("--tol")) merged.tol = flags.tol;
    if (passed("--max-iter")) merged.max_iter = flags.max_iter;
    if (passed("--gram-cap")) merged.gram_cap = flags.gram_cap;
    if (passed("--seed")) merged.seed = flags.seed;
    if (passed("--samples")) merged.samples = flags.samples;
    if (passed("--berr")) merged.berr = flags.berr;
    if (passed("--remainder")) merged.remainder = flags.remainder;
    if (passed("--subdivisions")) merged.subdivisions = flags.subdivisions;
    if (passed("--radius")) merged.radius = flags.radius;
    if (passed("--rho")) merged.rho = flags.rho;
    if (passed("--nu")) merged.nu = flags.nu;
    if (passed("--gamma")) merged.gamma = flags.gamma;
    if (passed("--qsr")) merged.qsr = flags.qsr;
    if (passed("--out")) merged.out = flags.out;
    if (passed("--bisection")) merged.bisection = flags.bisection;
    return merged;
}

int cmd_verify(const CommonArgs& args, const RunConfig& cfg) {
    auto model = parse_system(read_file(args.system_path));
    RunResult res = run_verify(model, cfg);
    if (!cfg.out.empty()) write_file(cfg.out, res.cert_json);
    if (res.exit_code == 0) {
        std::printf("certified: %s\n", cfg.mode.c_str());
        std::printf("V = %s\n", res.cert->storage.str().c_str());
        std::printf("sampled margin %.3e, residual %.3e\n", res.cert->report.sampled_margin,
                    res.cert->report.coeff_residual);
    } else {
        std::printf("not certified: %s\n", res.message.c_str());
    }
    return res.exit_code;
}

int cmd_index(const CommonArgs& args, const RunConfig& cfg) {
    auto model = parse_system(read_file(args.system_path));
    RunResult res = run_index(model, cfg);
    if (!cfg.out.empty()) write_file(cfg.out, res.cert_json);
    if (res.exit_code == 0) {
        if (res.bracket > 0)
            std::printf("%s index = %.9g (bisection bracket width %.3g)\n", cfg.mode.c_str(),
                        res.index, res.bracket);
        else
            std::printf("%s index = %.9g\n", cfg.mode.c_str(), res.index);
    } else {
        std::printf("not certified: %s\n", res.message.c_str());
    }
    return res.exit_code;
}

int cmd_sweep(const CommonArgs& args, const RunConfig& cfg, const std::string& radii_text) {
    RunConfig swept = cfg;
    if (!radii_text.empty()) {
        swept.radii.clear();
        std::stringstream ss(radii_text);
        std::string tok;
        while (std::getline(ss, tok, ',')) swept.radii.push_back(std::stod(tok));
    }
    if (swept.radii.empty()) throw ConfigError("sweep needs --radii r1,r2,...");
    auto model = parse_system(read_file(args.system_path));
    auto rows = run_sweep(model, swept);
    const std::string csv = sweep_to_csv(rows);
    if (!swept.out.empty())
        write_file(swept.out, csv);
    else
        std::fputs(csv.c_str(), stdout);
    // per-row certificates next to the CSV when requested
    if (!swept.out.empty()) {
        for (const auto& row : rows) {
            if (row.cert_json.empty()) continue;
            char suffix[64];
            std::snprintf(suffix, sizeof suffix, ".r%.6g.json", row.radius);
            write_file(swept.out + suffix, row.cert_json);
        }
    }
    return 0;
}

int cmd_export(const CommonArgs& args, const RunConfig& cfg) {
    auto model = parse_system(read_file(args.system_path));
    auto res = run_export(model, cfg);
    if (!cfg.out.empty())
        write_file(cfg.out, res.sdpa_text);
    else
        std::fputs(res.sdpa_text.c_str(), stdout);
    std::fprintf(stderr, "constraints %d, free vars %d, blocks", res.num_con, res.num_free);
    for (int b : res.block_sizes) std::fprintf(stderr, " %d", b);
    std::fprintf(stderr, "\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"local stability / dissipativity / passivity certification"};
    app.require_subcommand(1);

    CommonArgs vargs, iargs, sargs, eargs;
    RunConfig vcfg, icfg, scfg, ecfg;
    std::string radii_text;

    auto* verify = app.add_subcommand("verify", "certify the configured property");
    add_common(verify, vargs, vcfg);
    auto* index = app.add_subcommand("index", "maximize the OFP/IFP passivity index");
    add_common(index, iargs, icfg);
    auto* sweep = app.add_subcommand("sweep", "index versus region radius, CSV output");
    add_common(sweep, sargs, scfg);
    sweep->add_option("--radii", radii_text, "comma-separated ascending radii");
    auto* exportc = app.add_subcommand("export", "write the SDPA sparse problem file");
    add_common(exportc, eargs, ecfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (verify->parsed()) return cmd_verify(vargs, merge_config(verify, vargs, vcfg));
        if (index->parsed()) {
            RunConfig cfg = merge_config(index, iargs, icfg);
            if (cfg.mode != "ofp" && cfg.mode != "ifp") cfg.mode = "ofp";
            return cmd_index(iargs, cfg);
        }
        if (sweep->parsed()) {
            RunConfig cfg = merge_config(sweep, sargs, scfg);
            if (cfg.mode != "ofp" && cfg.mode != "ifp") cfg.mode = "ofp";
            return cmd_sweep(sargs, cfg, radii_text);
        }
        if (exportc->parsed()) return cmd_export(eargs, merge_config(exportc, eargs, ecfg));
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const SdpError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal error: %s\n", e.what());
        return 3;
    }
    return 1;
}
