// tcmeval: multi-speaker transcript scoring.
//
// Exit codes: 0 success, 1 invalid input or arguments, 2 internal failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "tcmeval/bridge.hpp"
#include "tcmeval/tcmeval.hpp"

namespace fs = std::filesystem;
using namespace tcmeval;

namespace {

struct Options {
    std::string ref_path;
    std::string hyp_path;
    std::string normalizer = "forgiving";
    std::string filler_lexicon;
    double collar = 5.0;
    std::string collar_mode = "reference";
    double der_collar = 0.25;
    std::string embedder = "builtin";
    bool no_clamp = false;
    std::string insert_attach = "following";
    bool decompose = false;
    bool all = false;
    std::vector<std::string> metrics;
    std::string out = "-";
    std::string format = "json";
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    std::string dir_a;
    std::string dir_b;
};

void add_io(CLI::App* cmd, Options& o) {
    cmd->add_option("--ref", o.ref_path, "Reference SegLST (JSON lines)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--hyp", o.hyp_path, "Hypothesis SegLST (JSON lines)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", o.out, "Output path, '-' for stdout")->capture_default_str();
    cmd->add_option("--format", o.format, "Output format")
        ->check(CLI::IsMember({"json", "tsv"}))
        ->capture_default_str();
    cmd->add_option("--jobs", o.jobs, "Sessions scored in parallel")->check(CLI::PositiveNumber);
}

void add_text(CLI::App* cmd, Options& o) {
    cmd->add_option("--normalizer", o.normalizer, "Text normalization scheme")
        ->check(CLI::IsMember({"none", "verbatim", "forgiving"}))
        ->capture_default_str();
    cmd->add_option("--filler-lexicon", o.filler_lexicon, "Filler tokens, one per line")
        ->check(CLI::ExistingFile);
}

void add_time(CLI::App* cmd, Options& o) {
    cmd->add_option("--collar", o.collar, "tcpWER collar in seconds")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    cmd->add_option("--collar-mode", o.collar_mode, "Apply the collar to the reference word only or to both")
        ->check(CLI::IsMember({"reference", "symmetric"}))
        ->capture_default_str();
}

void add_semantic(CLI::App* cmd, Options& o) {
    cmd->add_option("--embedder", o.embedder, "'builtin' or 'bridge=URL'")->capture_default_str();
    cmd->add_flag("--no-clamp", o.no_clamp, "Do not clamp cosine similarity to [0,1]");
    cmd->add_option("--insert-attach", o.insert_attach,
                    "Utterance receiving insertions between two reference utterances")
        ->check(CLI::IsMember({"following", "preceding"}))
        ->capture_default_str();
}

void add_der(CLI::App* cmd, Options& o) {
    cmd->add_option("--der-collar", o.der_collar, "DER no-score collar in seconds")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
}

EvalConfig make_config(const Options& o) {
    EvalConfig c;
    c.normalizer = parse_norm_kind(o.normalizer);
    if (!o.filler_lexicon.empty()) c.filler_lexicon = load_filler_lexicon(o.filler_lexicon);
    c.collar = o.collar;
    c.collar_mode = parse_collar_mode(o.collar_mode);
    c.der_collar = o.der_collar;
    c.embedder = o.embedder;
    c.clamp = !o.no_clamp;
    c.attach = parse_insert_attachment(o.insert_attach);
    c.scheme(); // validates the lexicon for `forgiving`
    return c;
}

std::unique_ptr<EmbeddingProvider> make_embedder(const std::string& spec) {
    if (spec == "builtin") return std::make_unique<BuiltinEmbedder>();
    if (spec.rfind("bridge=", 0) == 0) return std::make_unique<BridgeEmbedder>(spec.substr(7));
    throw ParameterError("unknown embedder '" + spec + "' (expected builtin or bridge=URL)");
}

void emit(const std::string& out, const std::string& payload) {
    if (out == "-") {
        std::cout << payload;
        return;
    }
    std::ofstream f(out);
    if (!f) throw InputError("cannot write '" + out + "'");
    f << payload;
}

std::string render(const MetricReport& r, const std::string& format) {
    if (format == "tsv") {
        std::ostringstream os;
        write_tsv(os, r);
        return os.str();
    }
    return to_json(r).dump(2) + "\n";
}

int run_scoring(const Options& o, EvalConfig cfg) {
    const auto refs = parse_seglst_file(o.ref_path, Side::reference);
    const auto hyps = parse_seglst_file(o.hyp_path, Side::hypothesis);
    std::unique_ptr<EmbeddingProvider> provider =
        cfg.tcpsemer ? make_embedder(o.embedder) : std::make_unique<BuiltinEmbedder>();
    if (cfg.tcpsemer) cfg.embedder = provider->name();
    const auto report = score_corpus(refs, hyps, cfg, *provider, o.jobs);
    for (const auto& [metric, ids] : report.excluded) {
        std::cerr << "warning: " << ids.size() << " session(s) excluded from " << metric
                  << " (undefined rate)\n";
    }
    emit(o.out, render(report, o.format));
    return 0;
}

std::vector<NamedReport> load_report_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) throw InputError("'" + dir + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<NamedReport> out;
    for (const auto& p : files) {
        std::ifstream in(p);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw SchemaError(p.string() + ": " + e.what());
        }
        out.push_back({p.stem().string(), report_from_json(j)});
    }
    return out;
}

int run_sensitivity(const Options& o) {
    const auto rows = sensitivity(load_report_dir(o.dir_a), load_report_dir(o.dir_b));
    for (const auto& r : rows)
        for (const auto& w : r.warnings) std::cerr << "warning: " << r.metric << ": " << w << "\n";
    if (o.format == "tsv") {
        std::ostringstream os;
        os << "metric\tsystems\tmean\tstd\n";
        for (const auto& r : rows) os << r.metric << '\t' << r.systems.size() << '\t' << r.mean << '\t' << r.std << '\n';
        emit(o.out, os.str());
    } else {
        emit(o.out, to_json(rows).dump(2) + "\n");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tcmeval: cpWER, tcpWER, tcpSemER and DER for multi-speaker transcripts"};
    app.require_subcommand(1);
    Options o;

    auto* cp = app.add_subcommand("cpwer", "Concatenated minimum-permutation WER");
    add_io(cp, o);
    add_text(cp, o);

    auto* tcp = app.add_subcommand("tcpwer", "Time-constrained minimum-permutation WER");
    add_io(tcp, o);
    add_text(tcp, o);
    add_time(tcp, o);
    tcp->add_flag("--decompose", o.decompose, "Add the overlap / single-speaker decomposition");

    auto* sem = app.add_subcommand("tcpsemer", "Time-constrained semantic error rate");
    add_io(sem, o);
    add_text(sem, o);
    add_time(sem, o);
    add_semantic(sem, o);

    auto* dr = app.add_subcommand("der", "Diarization error rate");
    add_io(dr, o);
    add_der(dr, o);

    auto* rep = app.add_subcommand("report", "Every metric in one document");
    add_io(rep, o);
    add_text(rep, o);
    add_time(rep, o);
    add_semantic(rep, o);
    add_der(rep, o);
    auto* all_flag = rep->add_flag("--all", o.all, "Compute every metric");
    rep->add_option("--metrics", o.metrics, "Subset of metrics")
        ->delimiter(',')
        ->check(CLI::IsMember({"cpwer", "tcpwer", "decomposition", "tcpsemer", "der", "speaker_count"}))
        ->excludes(all_flag);

    auto* sens = app.add_subcommand("sensitivity", "Relative metric change between two report sets");
    sens->add_option("--a", o.dir_a, "Directory of baseline reports (*.json)")->required();
    sens->add_option("--b", o.dir_b, "Directory of comparison reports (*.json)")->required();
    sens->add_option("--out", o.out, "Output path, '-' for stdout")->capture_default_str();
    sens->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "tsv"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*sens) return run_sensitivity(o);

        EvalConfig cfg = make_config(o);
        if (*cp) {
            cfg.cpwer = true;
        } else if (*tcp) {
            cfg.tcpwer = true;
            cfg.decompose = o.decompose;
        } else if (*sem) {
            cfg.tcpsemer = true;
        } else if (*dr) {
            cfg.der = true;
            cfg.speaker_count = true;
        } else if (*rep) {
            if (o.all) {
                cfg.cpwer = cfg.tcpwer = cfg.decompose = cfg.tcpsemer = cfg.der =
                    cfg.speaker_count = true;
            } else if (o.metrics.empty()) {
                throw ParameterError("report needs --all or --metrics");
            }
            for (const auto& m : o.metrics) {
                if (m == "cpwer") cfg.cpwer = true;
                if (m == "tcpwer") cfg.tcpwer = true;
                if (m == "decomposition") cfg.decompose = true;
                if (m == "tcpsemer") cfg.tcpsemer = true;
                if (m == "der") cfg.der = true;
                if (m == "speaker_count") cfg.speaker_count = true;
            }
        }
        return run_scoring(o, cfg);
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
