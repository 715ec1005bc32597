#include <cstdio>
#include <filesystem>
#include <iostream>

#include <CLI11.hpp>

#include "rca/cleanse.hpp"
#include "rca/experiment.hpp"
#include "rca/pipeline.hpp"
#include "rca/service.hpp"
#include "rca/synth.hpp"
#include "rca/util.hpp"

namespace rca {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kUsage =
    "usage: rca <command> [options]\n"
    "\n"
    "commands:\n"
    "  ingest          load, validate and filter an incident file\n"
    "  clean           strip stack traces and embedded images\n"
    "  summarize       add short summaries to cleaned incidents\n"
    "  index-build     embed a corpus and write a vector index\n"
    "  query           nearest historical incidents for an incident\n"
    "  generate        root-cause suggestion for an incident\n"
    "  evaluate        lexical metrics over candidate/reference pairs\n"
    "  experiment-run  run a study design over a prepared corpus\n"
    "  report          render a run result as csv or json\n"
    "  synth           write the seeded synthetic corpus\n"
    "  serve           start the HTTP service\n"
    "\n"
    "run 'rca <command> --help' for options\n";

AppConfig config_or_default(const std::string& path) {
    return path.empty() ? AppConfig::from_json(json::object()) : AppConfig::load(path);
}

json read_json_file(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, path + " is not valid JSON: " + e.what());
    }
}

std::vector<std::size_t> parse_size_list(const std::string& text) {
    std::vector<std::size_t> out;
    for (int v : parse_int_list(text)) out.push_back(static_cast<std::size_t>(v));
    return out;
}

SplitSizes parse_splits(const std::string& text) {
    const auto v = parse_size_list(text);
    if (v.size() != 3) fail(ErrorKind::InvalidArgument, "--split needs three sizes: retrieval,validation,test");
    return {v[0], v[1], v[2]};
}

void print_report(const CleanReport& r) {
    std::printf("stack_lines_removed\t%zu\nimages_removed\t%zu\nchars_before\t%zu\nchars_after\t%zu\n",
                r.stack_lines_removed, r.images_removed, r.chars_before, r.chars_after);
}

}  // namespace

int cli_dispatch(int argc, char** argv) {
    CLI::App app{"Retrieval-augmented root cause analysis for incident tickets", "rca"};
    app.require_subcommand(0, 1);
    std::string config_path;
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);

    std::function<void()> action;

    // ingest
    auto* ingest = app.add_subcommand("ingest", "load, validate and filter incidents");
    std::string in_path, out_path;
    int max_severity = 4;
    std::string exclude = "ignore,test,dummy";
    ingest->add_option("--input,-i", in_path, "raw incident NDJSON")->required();
    ingest->add_option("--output,-o", out_path, "filtered incident NDJSON")->required();
    ingest->add_option("--max-severity", max_severity, "highest severity kept");
    ingest->add_option("--exclude", exclude, "comma-separated title keywords to drop");
    ingest->callback([&] {
        action = [&] {
            const auto loaded = load_incidents(in_path);
            FilterSpec spec;
            spec.max_severity = max_severity;
            spec.excluded_title_keywords.clear();
            std::string word;
            for (char c : exclude + ",") {
                if (c == ',') {
                    if (!trim(word).empty()) spec.excluded_title_keywords.push_back(to_lower_ascii(trim(word)));
                    word.clear();
                } else {
                    word += c;
                }
            }
            const auto kept = filter_incidents(loaded.incidents, spec);
            save_incidents(out_path, kept);
            std::printf("loaded\t%zu\nrejected\t%zu\nkept\t%zu\n", loaded.incidents.size(), loaded.rejected,
                        kept.size());
        };
    });

    // clean
    auto* clean = app.add_subcommand("clean", "strip stack traces and embedded images");
    clean->add_option("--input,-i", in_path)->required();
    clean->add_option("--output,-o", out_path)->required();
    clean->callback([&] {
        action = [&] {
            CleanReport report;
            save_incidents(out_path, clean_all(load_incidents(in_path).incidents, &report));
            print_report(report);
        };
    });

    // summarize
    auto* summarize = app.add_subcommand("summarize", "add short summaries");
    std::string cache_path;
    summarize->add_option("--input,-i", in_path)->required();
    summarize->add_option("--output,-o", out_path)->required();
    summarize->add_option("--cache", cache_path, "summary cache NDJSON (overrides config)");
    summarize->callback([&] {
        action = [&] {
            const auto cfg = config_or_default(config_path);
            const auto incidents = load_incidents(in_path).incidents;
            auto provider = make_provider(cfg.summarizer, {});
            const auto path = cache_path.empty() ? cfg.summary_cache_path : cache_path;
            SummaryCache cache = path.empty() ? SummaryCache() : SummaryCache(path);
            const auto out = summarize_incidents(*provider, incidents, cache, cfg.concurrency);
            save_incidents(out_path, out);
            std::printf("summarized\t%zu\n", out.size());
        };
    });

    // index-build
    auto* index_build = app.add_subcommand("index-build", "embed a corpus and write an index");
    bool quantized = false;
    index_build->add_option("--input,-i", in_path, "summarized corpus NDJSON")->required();
    index_build->add_option("--output,-o", out_path, "index file")->required();
    index_build->add_flag("--quantized", quantized, "store 8-bit codes");
    index_build->callback([&] {
        action = [&] {
            const auto cfg = config_or_default(config_path);
            const Embedder embedder(cfg.embedder);
            const auto flat = build_incident_index(load_incidents(in_path).incidents, embedder, cfg.concurrency);
            const AnyIndex index = quantized ? AnyIndex(quantize(flat)) : AnyIndex(flat);
            save_index(index, out_path);
            std::printf("entries\t%zu\ndimension\t%zu\nkind\t%s\n", index_size(index), index_dimension(index),
                        quantized ? "quantized" : "flat");
        };
    });

    // query
    auto* query = app.add_subcommand("query", "nearest historical incidents");
    std::string incident_path, corpus_override, index_override;
    std::size_t k = 0;
    bool k_given = false;
    query->add_option("--incident", incident_path, "incident payload JSON")->required();
    query->add_option("-k", k, "number of hits")->each([&](const std::string&) { k_given = true; });
    query->add_option("--corpus", corpus_override, "corpus NDJSON (overrides config)");
    query->add_option("--index", index_override, "index file (overrides config)");

    auto load_service = [&]() {
        auto cfg = config_or_default(config_path);
        if (!corpus_override.empty()) cfg.corpus_path = corpus_override;
        if (!index_override.empty()) cfg.index_path = index_override;
        auto service = std::make_unique<RcaService>(cfg);
        service->load();
        return service;
    };
    query->callback([&] {
        action = [&] {
            auto service = load_service();
            const auto hits = service->similar_to_payload(read_json_file(incident_path), k_given ? k : service->config().k);
            for (const auto& h : hits)
                std::printf("%s\t%.6f\t%.6f\n", h.at("id").get<std::string>().c_str(), h.at("distance").get<double>(),
                            h.at("relevance").get<double>());
        };
    });

    // generate
    auto* generate = app.add_subcommand("generate", "root-cause suggestion for an incident");
    std::string ordering;
    generate->add_option("--incident", incident_path, "incident payload JSON")->required();
    generate->add_option("-k", k, "in-context examples")->each([&](const std::string&) { k_given = true; });
    generate->add_option("--ordering", ordering, "descending | ascending | shuffled[:seed]");
    generate->add_option("--corpus", corpus_override);
    generate->add_option("--index", index_override);
    generate->callback([&] {
        action = [&] {
            auto service = load_service();
            auto payload = read_json_file(incident_path);
            if (!payload.is_object()) fail(ErrorKind::InvalidArgument, "incident payload must be an object");
            if (k_given) payload["k"] = k;
            if (!ordering.empty()) payload["ordering"] = ordering;
            std::printf("%s\n", service->rca(payload).dump(2).c_str());
        };
    });

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "lexical metrics over pairs");
    std::string pairs_path;
    evaluate->add_option("--pairs", pairs_path, "NDJSON of {candidate, reference}")->required();
    evaluate->add_option("--output,-o", out_path, "write the report here instead of stdout");
    evaluate->callback([&] {
        action = [&] {
            RcaService service(config_or_default(config_path));
            const auto report = service.evaluate_ndjson(read_file(pairs_path)).dump(2) + "\n";
            if (out_path.empty()) std::fputs(report.c_str(), stdout);
            else write_file(out_path, report);
        };
    });

    // experiment-run
    auto* experiment = app.add_subcommand("experiment-run", "run a study design");
    std::string design = "kshot", k_list, m_list, limits, split = "140,20,40", out_dir = "runs", experiment_config;
    std::uint64_t seed = 42;
    bool seed_given = false;
    std::size_t study_k = 0;
    bool study_k_given = false;
    int concurrency = 1;
    experiment->add_option("--design", design, "kshot | full-prompt | selection | ordering | chunked");
    experiment->add_option("--k", k_list, "k values for the sweep, e.g. 0,5,10,20,30,40");
    experiment->add_option("--study-k", study_k, "k for selection, ordering and chunked designs")
        ->each([&](const std::string&) { study_k_given = true; });
    experiment->add_option("--m", m_list, "chunk counts for the chunked baseline");
    experiment->add_option("--limits", limits, "prompt limits for the full-prompt design");
    experiment->add_option("--input,-i", in_path, "summarized incident NDJSON")->required();
    experiment->add_option("--split", split, "retrieval,validation,test sizes");
    experiment->add_option("--seed", seed)->each([&](const std::string&) { seed_given = true; });
    experiment->add_option("--experiment-config", experiment_config, "JSON experiment config");
    experiment->add_option("--out-dir", out_dir, "directory for run.json, report.csv, manifest.json");
    experiment->add_option("--concurrency", concurrency);
    experiment->callback([&] {
        action = [&] {
            const auto cfg = config_or_default(config_path);
            ExperimentConfig ec = experiment_config.empty() ? ExperimentConfig{}
                                                            : experiment_config_from_json(read_json_file(experiment_config));
            if (experiment_config.empty()) {
                ec.budget = cfg.budget;
                ec.seed = cfg.seed;
            }
            ec.design = parse_design(design);
            if (!k_list.empty()) ec.k_values = parse_size_list(k_list);
            if (!m_list.empty()) ec.chunk_counts = parse_size_list(m_list);
            if (!limits.empty()) ec.prompt_limits = parse_size_list(limits);
            if (study_k_given) ec.k = study_k;
            if (seed_given) ec.seed = seed;
            ec.concurrency = concurrency;
            ec.validate();

            const auto incidents = load_incidents(in_path).incidents;
            const auto splits = split_corpus(incidents, parse_splits(split));
            const Embedder embedder(cfg.embedder);
            const AnyIndex index = build_incident_index(splits.retrieval, embedder, cfg.concurrency);
            auto generator = make_provider(cfg.generator, splits.retrieval);
            std::vector<std::unique_ptr<ExternalScorer>> scorers;
            ExperimentContext ctx;
            ctx.splits = &splits;
            ctx.index = &index;
            ctx.embedder = &embedder;
            ctx.generator = generator.get();
            ctx.corpus_hash = corpus_fingerprint(splits);
            for (const auto& s : cfg.external_scorers) {
                scorers.push_back(std::make_unique<HttpExternalScorer>(s.name, s.endpoint));
                ctx.external.push_back(scorers.back().get());
            }
            const auto result = run_experiment(ec, ctx);
            fs::create_directories(out_dir);
            emit_report(result, "json", (fs::path(out_dir) / "run.json").string());
            emit_report(result, "csv", (fs::path(out_dir) / "report.csv").string());
            write_file((fs::path(out_dir) / "manifest.json").string(), run_manifest(result).dump(2) + "\n");
            std::fputs(format_report(result, "csv").c_str(), stdout);
            for (const auto& c : result.comparisons) {
                std::printf("%s vs %s: n=%zu", c.treatment.c_str(), c.baseline.c_str(), c.n);
                if (c.rouge_l_gain) std::printf(" ROUGE-L gain %s%%", format_gain(*c.rouge_l_gain).c_str());
                if (c.p_value) std::printf(" p=%.3g", *c.p_value);
                std::printf("\n");
            }
            if (result.ordering)
                std::printf("ordering: ROUGE-L spread %.4f, stddev of condition means %.4f\n",
                            result.ordering->spread, result.ordering->stddev_of_means);
            if (!result.failures.empty()) std::printf("failures\t%zu\n", result.failures.size());
        };
    });

    // report
    auto* report = app.add_subcommand("report", "render a run result");
    std::string run_path, format = "csv";
    report->add_option("--run", run_path, "run.json from experiment-run")->required();
    report->add_option("--format", format, "csv | json");
    report->add_option("--output,-o", out_path);
    report->callback([&] {
        action = [&] {
            const auto result = run_result_from_json(read_json_file(run_path));
            if (out_path.empty()) std::fputs(format_report(result, format).c_str(), stdout);
            else emit_report(result, format, out_path);
        };
    });

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "write the synthetic corpus");
    synth::SynthConfig synth_cfg;
    synth_cmd->add_option("--output,-o", out_path)->required();
    synth_cmd->add_option("--count", synth_cfg.incidents);
    synth_cmd->add_option("--families", synth_cfg.families);
    synth_cmd->add_option("--seed", synth_cfg.seed);
    synth_cmd->callback([&] {
        action = [&] {
            const auto incidents = synth::generate_incidents(synth_cfg);
            save_incidents(out_path, incidents);
            std::printf("incidents\t%zu\n", incidents.size());
        };
    });

    // serve
    auto* serve_cmd = app.add_subcommand("serve", "start the HTTP service");
    std::string host;
    int port = 0;
    serve_cmd->add_option("--host", host);
    serve_cmd->add_option("--port", port);
    serve_cmd->callback([&] {
        action = [&] {
            auto cfg = config_or_default(config_path);
            if (!host.empty()) cfg.host = host;
            if (port > 0) cfg.port = port;
            RcaService service(cfg);
            service.load();
            std::fprintf(stderr, "listening on %s:%d\n", cfg.host.c_str(), cfg.port);
            rca::serve(service, cfg.host, cfg.port);
        };
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        if (argc > 1 && app.get_subcommands().empty() && std::string(argv[1]).rfind("-", 0) != 0) {
            std::fprintf(stderr, "unknown command '%s'\n\n%s", argv[1], kUsage);
            return 2;
        }
        app.exit(e);
        return 2;
    }
    if (!action) {
        std::fputs(kUsage, stderr);
        return 2;
    }
    try {
        action();
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}

}  // namespace rca
