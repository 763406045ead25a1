#include "biopro/cli.hpp"

#include "biopro/calibration.hpp"
#include "biopro/constraints.hpp"
#include "biopro/error.hpp"
#include "biopro/io.hpp"
#include "biopro/keyvalue.hpp"
#include "biopro/metrics.hpp"
#include "biopro/prompts.hpp"
#include "biopro/reference_config.hpp"
#include "biopro/selection.hpp"
#include "biopro/subspace.hpp"
#include "biopro/synthgen.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <functional>
#include <memory>
#include <limits>
#include <ostream>
#include <set>

namespace biopro::cli {
namespace {

namespace fs = std::filesystem;

enum class Level { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

Level parse_level(const std::string& text) {
  if (text == "error") return Level::kError;
  if (text == "warn") return Level::kWarn;
  if (text == "debug") return Level::kDebug;
  return Level::kInfo;
}

struct Globals {
  std::uint64_t seed = 0;
  std::string precision = "f64";
  std::string out_dir;
  std::string log_level = "info";
};

std::string echo_value(const CLI::Option& opt) {
  std::vector<std::string> values;
  if (opt.count() > 0) {
    values = opt.results();
  } else {
    auto def = opt.get_default_str();
    if (def.size() >= 2 && (def.front() == '[' || def.front() == '{')) {
      def = def.substr(1, def.size() - 2);
      if (!def.empty()) values = CLI::detail::split(def, ',');
    } else {
      values.push_back(def);
    }
  }
  if (opt.get_type_size_max() <= 0 && opt.get_expected_max() <= 1 && !values.empty()) {
    return values.back() == "true" || values.back() == "1" ? "true" : "false";
  }
  const auto q = [](const std::string& v) { return '"' + v + '"'; };
  if (opt.get_expected_max() <= 1) return values.empty() ? q("") : q(values.back());
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ',';
    out += q(values[i]);
  }
  return out + "]";
}

class Context {
 public:
  Context(const CLI::App& app, const Globals& globals, std::ostream& out, std::ostream& err)
      : app_(app), globals_(globals), level_(parse_level(globals.log_level)), out_(out), err_(err) {}

  std::uint64_t seed() const { return globals_.seed; }
  io::Dtype dtype() const { return io::parse_dtype(globals_.precision); }
  fs::path path(const std::string& file) const { return fs::path(globals_.out_dir) / file; }
  std::ostream& out() { return out_; }

  void warn(const std::string& msg) { log(Level::kWarn, "warning", msg); }
  void info(const std::string& msg) { log(Level::kInfo, "info", msg); }
  void debug(const std::string& msg) { log(Level::kDebug, "debug", msg); }

  // Every run leaves a replayable record of its effective flags: the global
  // options plus those of the selected subcommand chain, readable by --config.
  void echo_config(const std::string& name) {
    std::vector<const CLI::App*> chain;
    for (const CLI::App* a = &app_; a != nullptr;) {
      chain.push_back(a);
      const auto subs = a->get_subcommands();
      a = subs.empty() ? nullptr : subs.front();
    }
    std::string text;
    std::string section;
    for (const auto* a : chain) {
      if (a != &app_) {
        section += (section.empty() ? "" : ".") + a->get_name();
        text += "[" + section + "]\n";
      }
      for (const auto* opt : a->get_options()) {
        const auto& names = opt->get_lnames();
        if (names.empty() || names.front() == "help" || names.front() == "help-all" ||
            names.front() == "config") {
          continue;
        }
        text += names.front() + "=" + echo_value(*opt) + "\n";
      }
    }
    const auto file = path(name + ".config");
    write_file_atomic(file, text);
    debug("config echo written to " + file.string());
  }

  void wrote(const fs::path& file) { info("wrote " + file.string()); }

 private:
  void log(Level level, const char* tag, const std::string& msg) {
    if (level <= level_) err_ << tag << ": " << msg << '\n';
  }

  const CLI::App& app_;
  const Globals& globals_;
  Level level_;
  std::ostream& out_;
  std::ostream& err_;
};

using Action = std::function<void(Context&)>;

std::string join(const std::vector<std::string>& items, char sep) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += sep;
    out += s;
  }
  return out;
}

SkewNormalParams params_from(const std::vector<double>& v, const char* flag) {
  if (v.size() != 3) {
    fail(ErrorCode::kUsage, std::string(flag) + " expects location,scale,shape");
  }
  SkewNormalParams p{v[0], v[1], v[2]};
  p.validate();
  return p;
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
  std::size_t d = 64;
  std::size_t n = 500;
  std::size_t n_neutral = 500;
  std::size_t n_explicit = 500;
  std::vector<double> gaps{4.0};
  double noise = 0.0;
  double jitter = 0.0;
  double semantic_scale = 1.0;
  std::vector<double> neutral_dist{0.5, 0.5, 2.0};
  std::vector<double> explicit_dist{6.0, 1.5, 2.0};
  double attr_lo = 0.0;
  double attr_hi = 1.0;
  std::string name;
};

SynthConfig synth_config(const SynthOptions& o, std::uint64_t seed) {
  if (o.gaps.empty()) fail(ErrorCode::kUsage, "--gap needs at least one value");
  if (o.gaps.size() > o.d) fail(ErrorCode::kUsage, "more planted directions than dimensions");
  auto cfg = config_with_random_directions(o.d, o.gaps, seed);
  cfg.n_pairs = o.n;
  cfg.n_attribute = o.n;
  cfg.n_neutral = o.n_neutral;
  cfg.n_explicit = o.n_explicit;
  cfg.noise_sigma = o.noise;
  cfg.gap_jitter = o.jitter;
  cfg.semantic_scale = o.semantic_scale;
  cfg.neutral_score_dist = params_from(o.neutral_dist, "--neutral-dist");
  cfg.explicit_score_dist = params_from(o.explicit_dist, "--explicit-dist");
  cfg.attribute_dir = cfg.bias_dirs.front().direction;
  cfg.attribute_lo = o.attr_lo;
  cfg.attribute_hi = o.attr_hi;
  cfg.validate();
  return cfg;
}

void write_planted(Context& ctx, const SynthConfig& cfg, const std::string& name) {
  Matrix dirs(static_cast<Eigen::Index>(cfg.d), static_cast<Eigen::Index>(cfg.bias_dirs.size()));
  for (std::size_t i = 0; i < cfg.bias_dirs.size(); ++i) {
    dirs.col(static_cast<Eigen::Index>(i)) = cfg.bias_dirs[i].direction;
  }
  const auto file = ctx.path(name + ".planted.emb");
  io::write_embeddings(EmbeddingMatrix::unlabeled(std::move(dirs)), file, io::Dtype::kF64);
  ctx.wrote(file);
}

void write_log(Context& ctx, const GeneratorLog& log, const std::string& name) {
  const auto file = ctx.path(name + ".log.tsv");
  write_file_atomic(file, log.to_tsv());
  ctx.wrote(file);
}

void add_synth_common(CLI::App* sub, SynthOptions& o) {
  sub->add_option("--d", o.d, "Embedding dimension")->check(CLI::PositiveNumber);
  sub->add_option("--gap", o.gaps, "Planted gap per direction, strictly decreasing")
      ->delimiter(',');
  sub->add_option("--noise", o.noise, "Isotropic noise standard deviation")
      ->check(CLI::NonNegativeNumber);
  sub->add_option("--semantic-scale", o.semantic_scale, "Scale of complement-space content")
      ->check(CLI::NonNegativeNumber);
}

void register_synth(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& actions) {
  auto* synth = app.add_subcommand("synth", "Generate synthetic embeddings with planted bias");
  synth->require_subcommand(1);

  auto pairs_o = std::make_shared<SynthOptions>();
  pairs_o->name = "pairs";
  auto* pairs = synth->add_subcommand("pairs", "Counterfactual pair sets");
  add_synth_common(pairs, *pairs_o);
  pairs->add_option("--n", pairs_o->n, "Number of pairs")->check(CLI::PositiveNumber);
  pairs->add_option("--jitter", pairs_o->jitter, "Relative per-pair gap jitter")
      ->check(CLI::Range(0.0, 1.0));
  pairs->add_option("--name", pairs_o->name, "Output base name");
  actions.emplace_back(pairs, [pairs_o](Context& ctx) {
    const auto cfg = synth_config(*pairs_o, ctx.seed());
    const auto out = generate_counterfactual_pairs(cfg);
    for (const auto& [side, m] : {std::pair{"_a", &out.pairs.side_a}, std::pair{"_b", &out.pairs.side_b}}) {
      const auto file = ctx.path(pairs_o->name + side + ".emb");
      io::write_embeddings(*m, file, ctx.dtype());
      ctx.wrote(file);
    }
    write_log(ctx, out.log, pairs_o->name);
    write_planted(ctx, cfg, pairs_o->name);
    ctx.echo_config(pairs_o->name);
  });

  auto labeled_o = std::make_shared<SynthOptions>();
  labeled_o->name = "labeled";
  auto* labeled = synth->add_subcommand("labeled", "Neutral and explicit columns with planted scores");
  add_synth_common(labeled, *labeled_o);
  labeled->add_option("--n-neutral", labeled_o->n_neutral, "Neutral column count");
  labeled->add_option("--n-explicit", labeled_o->n_explicit, "Explicit column count");
  labeled->add_option("--neutral-dist", labeled_o->neutral_dist,
                      "Neutral score skew-normal location,scale,shape")
      ->delimiter(',');
  labeled->add_option("--explicit-dist", labeled_o->explicit_dist,
                      "Explicit score skew-normal location,scale,shape")
      ->delimiter(',');
  labeled->add_option("--name", labeled_o->name, "Output base name");
  actions.emplace_back(labeled, [labeled_o](Context& ctx) {
    const auto cfg = synth_config(*labeled_o, ctx.seed());
    const auto out = generate_labeled_set(cfg);
    const auto file = ctx.path(labeled_o->name + ".emb");
    io::write_embeddings(out.embeddings, file, ctx.dtype());
    ctx.wrote(file);
    write_log(ctx, out.log, labeled_o->name);
    write_planted(ctx, cfg, labeled_o->name);
    ctx.echo_config(labeled_o->name);
  });

  auto attr_o = std::make_shared<SynthOptions>();
  attr_o->name = "attribute";
  auto* attr = synth->add_subcommand("attribute", "Columns with a continuous attribute along the first direction");
  add_synth_common(attr, *attr_o);
  attr->add_option("--n", attr_o->n, "Number of columns")->check(CLI::PositiveNumber);
  attr->add_option("--attr-lo", attr_o->attr_lo, "Attribute lower bound");
  attr->add_option("--attr-hi", attr_o->attr_hi, "Attribute upper bound");
  attr->add_option("--name", attr_o->name, "Output base name");
  actions.emplace_back(attr, [attr_o](Context& ctx) {
    const auto cfg = synth_config(*attr_o, ctx.seed());
    const auto out = generate_attribute_set(cfg);
    const auto file = ctx.path(attr_o->name + ".emb");
    io::write_embeddings(out.embeddings, file, ctx.dtype());
    ctx.wrote(file);
    write_log(ctx, out.log, attr_o->name);
    write_planted(ctx, cfg, attr_o->name);
    ctx.echo_config(attr_o->name);
  });
}

// --------------------------------------------------------- fit-subspace

struct FitSubspaceOptions {
  std::string pairs_a;
  std::string pairs_b;
  std::size_t k = 2;
  std::string name = "subspace";
};

void register_fit_subspace(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& actions) {
  auto o = std::make_shared<FitSubspaceOptions>();
  auto* sub = app.add_subcommand("fit-subspace", "Bias subspace and orthogonal projector from pairs");
  sub->add_option("--pairs-a", o->pairs_a, "Side-a embeddings")->required();
  sub->add_option("--pairs-b", o->pairs_b, "Side-b embeddings")->required();
  sub->add_option("-k,--k", o->k, "Subspace dimension");
  sub->add_option("--name", o->name, "Output base name");
  actions.emplace_back(sub, [o](Context& ctx) {
    CounterfactualPairSet pairs{io::read_embeddings(o->pairs_a), io::read_embeddings(o->pairs_b)};
    pairs.validate();
    const auto s = fit_subspace(difference_matrix(pairs), o->k);
    if (s.rank_deficient()) {
      std::vector<std::string> weak;
      for (auto i : s.weak_directions) weak.push_back(std::to_string(i));
      ctx.warn("difference matrix has rank below k; directions " + join(weak, ',') +
               " carry no signal");
    }
    const auto p = orthogonal_projector(s);

    KeyValue report;
    report.set("k", static_cast<std::uint64_t>(s.rank()));
    report.set("d", static_cast<std::uint64_t>(s.dim()));
    report.set("pairs", static_cast<std::uint64_t>(pairs.side_a.count()));
    for (Eigen::Index i = 0; i < s.singular_values.size(); ++i) {
      report.set("singular_value." + std::to_string(i), s.singular_values(i));
    }
    report.set("rank_deficient", s.rank_deficient());
    report.set("orthonormality_residual", s.orthonormality_residual());
    report.set("checksum", s.checksum());

    const auto sub_file = ctx.path(o->name + ".sub");
    const auto prj_file = ctx.path(o->name + ".perp.prj");
    const auto report_file = ctx.path(o->name + ".report");
    io::write_subspace(s, sub_file, ctx.dtype());
    io::write_projector(p, prj_file, ctx.dtype());
    report.save(report_file);
    for (Eigen::Index i = 0; i < s.singular_values.size(); ++i) {
      ctx.out() << "sigma_" << i << '\t' << format_double(s.singular_values(i)) << '\n';
    }
    ctx.wrote(sub_file);
    ctx.wrote(prj_file);
    ctx.wrote(report_file);
    ctx.echo_config(o->name);
  });
}

// ------------------------------------------------------------ fit-policy

struct FitPolicyOptions {
  std::string subspace;
  std::string embeddings;
  std::string neutral_scores;
  std::string explicit_scores;
  std::vector<double> neutral_params;
  std::vector<double> explicit_params;
  double lambda_c = 3.0;
  std::string lambda_side = "weights_explicit";
  std::size_t score_dim = 0;
  std::string name = "policy";
};

struct ScorePopulations {
  std::vector<double> neutral;
  std::vector<double> explicit_;
};

ScorePopulations scores_from_embeddings(const std::string& emb_path, const std::string& sub_path,
                                        std::size_t dim) {
  const auto h = io::read_embeddings(emb_path);
  const auto s = io::read_subspace(sub_path);
  const auto scores = projection_scores(h, s, dim);
  ScorePopulations out;
  for (std::size_t j = 0; j < h.count(); ++j) {
    const auto g = h.labels[j].group;
    if (g == Group::kNeutral) out.neutral.push_back(scores[j]);
    if (is_explicit(g)) out.explicit_.push_back(scores[j]);
  }
  return out;
}

void register_fit_policy(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& actions) {
  auto o = std::make_shared<FitPolicyOptions>();
  auto* sub = app.add_subcommand("fit-policy", "Fit score distributions and solve the selection threshold");
  auto* subspace = sub->add_option("--subspace", o->subspace, "Subspace file (with --embeddings)");
  auto* emb = sub->add_option("--embeddings", o->embeddings, "Labeled embeddings");
  auto* ns = sub->add_option("--neutral-scores", o->neutral_scores, "Neutral score file");
  auto* es = sub->add_option("--explicit-scores", o->explicit_scores, "Explicit score file");
  auto* np = sub->add_option("--neutral-params", o->neutral_params,
                             "Known neutral location,scale,shape (skips fitting)")
                 ->delimiter(',')->expected(3);
  auto* ep = sub->add_option("--explicit-params", o->explicit_params,
                             "Known explicit location,scale,shape (skips fitting)")
                 ->delimiter(',')->expected(3);
  subspace->needs(emb);
  emb->needs(subspace);
  ns->needs(es);
  es->needs(ns);
  np->needs(ep);
  ep->needs(np);
  emb->excludes(ns)->excludes(np);
  ns->excludes(np);
  sub->add_option("--lambda-c", o->lambda_c, "Trade-off coefficient")->check(CLI::PositiveNumber);
  sub->add_option("--lambda-side", o->lambda_side, "Which term the coefficient weights")
      ->check(CLI::IsMember({"weights_explicit", "weights_neutral"}));
  sub->add_option("--score-dim", o->score_dim, "Basis direction used for scoring");
  sub->add_option("--name", o->name, "Output base name");
  actions.emplace_back(sub, [o, emb, ns, np](Context& ctx) {
    const auto side = parse_lambda_side(o->lambda_side);
    KeyValue report;
    SelectionPolicy policy;
    ThresholdResult threshold;
    if (np->count() > 0) {
      policy.neutral = params_from(o->neutral_params, "--neutral-params");
      policy.explicit_ = params_from(o->explicit_params, "--explicit-params");
      threshold = solve_threshold_detailed(policy.neutral, policy.explicit_, o->lambda_c, side);
      policy.delta_c = threshold.delta;
      policy.lambda_c = o->lambda_c;
      policy.score_dim = o->score_dim;
      policy.lambda_side = side;
      report.set("source", std::string("parameters"));
    } else {
      ScorePopulations pop;
      if (emb->count() > 0) {
        pop = scores_from_embeddings(o->embeddings, o->subspace, o->score_dim);
        report.set("source", std::string("embeddings"));
      } else if (ns->count() > 0) {
        pop.neutral = io::read_scores(o->neutral_scores);
        pop.explicit_ = io::read_scores(o->explicit_scores);
        report.set("source", std::string("scores"));
      } else {
        fail(ErrorCode::kUsage,
             "one of --embeddings, --neutral-scores or --neutral-params is required");
      }
      const auto fit = fit_policy(pop.neutral, pop.explicit_, o->lambda_c, side, o->score_dim);
      policy = fit.policy;
      threshold = fit.threshold;
      report.set("neutral.count", static_cast<std::uint64_t>(pop.neutral.size()));
      report.set("neutral.log_likelihood", fit.neutral_fit.log_likelihood);
      report.set("neutral.converged", fit.neutral_fit.converged);
      report.set("explicit.count", static_cast<std::uint64_t>(pop.explicit_.size()));
      report.set("explicit.log_likelihood", fit.explicit_fit.log_likelihood);
      report.set("explicit.converged", fit.explicit_fit.converged);
      if (!fit.neutral_fit.converged || !fit.explicit_fit.converged) {
        ctx.warn("skew-normal fit did not converge; parameters are the best vertex found");
      }
    }
    report.set("neutral.location", policy.neutral.location);
    report.set("neutral.scale", policy.neutral.scale);
    report.set("neutral.shape", policy.neutral.shape);
    report.set("explicit.location", policy.explicit_.location);
    report.set("explicit.scale", policy.explicit_.scale);
    report.set("explicit.shape", policy.explicit_.shape);
    report.set("delta_c", policy.delta_c);
    report.set("lambda_c", policy.lambda_c);
    report.set("lambda_side", std::string(to_string(policy.lambda_side)));
    report.set("score_dim", static_cast<std::uint64_t>(policy.score_dim));
    report.set("method", std::string(to_string(threshold.method)));
    report.set("objective", threshold.objective);
    report.set("stationarity", threshold.stationarity);
    report.set("boundary", threshold.boundary);
    if (threshold.boundary) ctx.warn("threshold objective has no interior maximum");

    const auto pol_file = ctx.path(o->name + ".pol");
    const auto report_file = ctx.path(o->name + ".report");
    io::write_policy(policy, pol_file);
    report.save(report_file);
    ctx.out() << "delta_c\t" << format_double(policy.delta_c) << '\n';
    ctx.wrote(pol_file);
    ctx.wrote(report_file);
    ctx.echo_config(o->name);
  });
}

// ---------------------------------------------------------------- scores

struct ScoresOptions {
  std::string subspace;
  std::string embeddings;
  std::size_t score_dim = 0;
  std::string name = "scores";
};

void register_scores(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& actions) {
  auto o = std::make_shared<ScoresOptions>();
  auto* sub = app.add_subcommand("scores", "Dump per-column projection scores, one per line");
  sub->add_option("--subspace", o->subspace, "Subspace file")->required();
  sub->add_option("--embeddings", o->embeddings, "Embeddings")->required();
  sub->add_option("--score-dim", o->score_dim, "Basis direction used for scoring");
  sub->add_option("--name", o->name, "Output base name");
  actions.emplace_back(sub, [o](Context& ctx) {
    const auto h = io::read_embeddings(o->embeddings);
    const auto scores = projection_scores(h, io::read_subspace(o->subspace), o->score_dim);
    const auto file = ctx.path(o->name + ".txt");
    io::write_scores(scores, file);
    ctx.wrote(file);
    ctx.echo_config(o->name);
  });
}

// --------------------------------------------------------------- project

struct ProjectOptions {
  std::string embeddings;
  std::string projector;
  bool selective = false;
  std::string policy;
  std::string subspace;
  std::string name = "projected";
};

void register_project(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& actions) {
  auto o = std::make_shared<ProjectOptions>();
  auto* sub = app.add_subcommand("project", "Apply a projector globally or selectively");
  sub->add_option("--embeddings", o->embeddings, "Input embeddings")->required();
  sub->add_option("--projector", o->projector, "Projector file")->required();
  auto* sel = sub->add_flag("--selective", o->selective, "Project only columns scoring below delta_c");
  auto* pol = sub->add_option("--policy", o->policy, "Policy file (with --selective)");
  auto* sp = sub->add_option("--subspace", o->subspace, "Subspace used for scoring (with --selective)");
  sel->needs(pol)->needs(sp);
  pol->needs(sel);
  sp->needs(sel);
  sub->add_option("--name", o->name, "Output base name");
  actions.emplace_back(sub, [o](Context& ctx) {
    const auto h = io::read_embeddings(o->embeddings);
    const auto p = io::read_projector(o->projector);
    const auto file = ctx.path(o->name + ".emb");
    if (!o->selective) {
      io::write_embeddings(project(p, h), file, ctx.dtype());
      ctx.out() << "projected\t" << h.count() << '/' << h.count() << '\n';
      ctx.wrote(file);
      ctx.echo_config(o->name);
      return;
    }
    const auto policy = io::read_policy(o->policy);
    const auto s = io::read_subspace(o->subspace);
    if (p.kind != ProjectorKind::kOrthogonal) {
      ctx.warn("selective projection with a " + std::string(to_string(p.kind)) + " projector");
    }
    if (p.provenance.subspace_checksum != 0 && p.provenance.subspace_checksum != s.checksum()) {
      ctx.warn("projector was not built from the scoring subspace");
    }
    const auto result = selective_project(h, p, policy, s);
    std::string mask = "source_id\tprojected\n";
    for (std::size_t j = 0; j < h.count(); ++j) {
      mask += h.labels[j].source_id + (result.projected[j] ? "\t1\n" : "\t0\n");
    }
    const auto mask_file = ctx.path(o->name + ".mask");
    io::write_embeddings(result.embeddings, file, ctx.dtype());
    write_file_atomic(mask_file, mask);
    ctx.out() << "projected\t" << result.projected_count() << '/' << h.count() << '\n';
    ctx.wrote(file);
    ctx.wrote(mask_file);
    ctx.echo_config(o->name);
  });
}

// ------------------------------------------------------------- calibrate

struct CalibrateOptions {
  std::string projector;
  std::string side_a;
  std::string side_b;
  std::string direction;
  double lambda_g = 0.0;
  std::string category;
  std::string model = "llava-1.5";
  std::string reference_config;
  bool pool_pairs = false;
  std::string name = "calibrated";
};

void register_calibrate(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& actions) {
  auto o = std::make_shared<CalibrateOptions>();
  auto* sub = app.add_subcommand("calibrate", "Closed-form calibrated projector");
  sub->add_option("--projector", o->projector, "Orthogonal projector file")->required();
  sub->add_option("--side-a", o->side_a, "Side-a embeddings")->required();
  sub->add_option("--side-b", o->side_b, "Side-b embeddings")->required();
  sub->add_option("--direction", o->direction, "a2b shifts side a toward side b; b2a the reverse")
      ->required()
      ->check(CLI::IsMember({"a2b", "b2a"}));
  auto* lg = sub->add_option("--lambda-g", o->lambda_g, "Calibration strength")
                 ->check(CLI::NonNegativeNumber);
  auto* cat = sub->add_option("--category", o->category, "Look lambda_g up in the reference config");
  lg->excludes(cat);
  sub->add_option("--model", o->model, "Reference config model column");
  sub->add_option("--reference-config", o->reference_config, "Reference config file (default: shipped)");
  sub->add_flag("--pool-pairs", o->pool_pairs, "Calibrate column centroids instead of all columns");
  sub->add_option("--name", o->name, "Output base name");
  actions.emplace_back(sub, [o, lg, cat](Context& ctx) {
    double lambda_g = o->lambda_g;
    if (cat->count() > 0) {
      const auto cfg = o->reference_config.empty() ? ReferenceConfig::shipped()
                                                  : ReferenceConfig::load(o->reference_config);
      const auto found = cfg.find_lambda_g(o->model, o->category);
      if (!found) {
        fail(ErrorCode::kValidation, "no lambda_g for category '" + o->category + "' and model '" +
                                         o->model + "' in the reference config");
      }
      lambda_g = *found;
      ctx.info("lambda_g=" + format_double(lambda_g) + " from reference config");
    } else if (lg->count() == 0) {
      fail(ErrorCode::kUsage, "one of --lambda-g or --category is required");
    }

    const auto p_perp = io::read_projector(o->projector);
    auto a = io::read_embeddings(o->side_a);
    auto b = io::read_embeddings(o->side_b);
    if (o->pool_pairs) {
      a = pool_columns(a);
      b = pool_columns(b);
    }
    const bool a2b = o->direction == "a2b";
    const auto problem = a2b ? make_problem(p_perp, a, b, lambda_g) : make_problem(p_perp, b, a, lambda_g);
    auto result = solve_calibration(problem);
    result.projector.provenance.parameters += ";direction=" + o->direction;
    if (o->pool_pairs) result.projector.provenance.parameters += ";pooled=true";

    KeyValue report;
    report.set("lambda_g", lambda_g);
    report.set("direction", o->direction);
    report.set("pooled", o->pool_pairs);
    report.set("objective", result.objective);
    report.set("gradient_residual", result.gradient_residual);
    report.set("smallest_pivot", result.smallest_pivot);

    const auto prj_file = ctx.path(o->name + ".prj");
    const auto report_file = ctx.path(o->name + ".report");
    io::write_projector(result.projector, prj_file, ctx.dtype());
    report.save(report_file);
    ctx.out() << "stationarity_residual\t" << format_double(result.gradient_residual) << '\n';
    ctx.wrote(prj_file);
    ctx.wrote(report_file);
    ctx.echo_config(o->name);
  });
}

// ------------------------------------------------------------------ eval

struct EvalOptions {
  std::string flags;
  double br_n = 0.0;
  double br_e = 0.0;
  double br_e_base = 0.0;
  std::string counts;
  std::vector<std::string> stereotype_a;
  std::vector<std::string> stereotype_b;
  std::string original;
  std::string debiased;
  std::string distance = "frobenius_rel";
  std::string name = "report";
};

void add_distance_options(CLI::App* sub, EvalOptions& o) {
  auto* orig = sub->add_option("--original", o.original, "Embeddings before intervention");
  auto* deb = sub->add_option("--debiased", o.debiased, "Embeddings after intervention");
  orig->needs(deb);
  deb->needs(orig);
  sub->add_option("--distance", o.distance, "Semantic distance kind")
      ->check(CLI::IsMember({"cosine", "frobenius_rel"}));
  sub->add_option("--name", o.name, "Output base name");
}

void fill_distance(BiasReport& report, const EvalOptions& o) {
  if (o.original.empty()) return;
  const auto h = io::read_embeddings(o.original);
  const auto h_tilde = io::read_embeddings(o.debiased);
  report.semantic_distance =
      semantic_distance(h.values, h_tilde.values, parse_distance_kind(o.distance));
}

void finish_report(Context& ctx, const BiasReport& report, const std::string& name) {
  report.validate();
  const auto file = ctx.path(name + ".report");
  write_file_atomic(file, report.to_keyvalue());
  ctx.out() << report.to_summary_line() << '\n';
  ctx.wrote(file);
  ctx.echo_config(name);
}

void register_eval(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& actions) {
  auto* eval = app.add_subcommand("eval", "Bias metrics from caption flags or generation counts");
  eval->require_subcommand(1);

  auto co = std::make_shared<EvalOptions>();
  auto* cap = eval->add_subcommand("captioning", "Bias rates and composite bias rate");
  auto* flags = cap->add_option("--flags", co->flags, "Caption flag TSV");
  auto* brn = cap->add_option("--br-n", co->br_n, "Neutral bias rate (percent)");
  auto* bre = cap->add_option("--br-e", co->br_e, "Explicit bias rate (percent)");
  cap->add_option("--br-e-base", co->br_e_base, "Explicit bias rate of the unmodified model")
      ->required();
  brn->needs(bre);
  bre->needs(brn);
  flags->excludes(brn)->excludes(bre);
  add_distance_options(cap, *co);
  actions.emplace_back(cap, [co, flags, brn](Context& ctx) {
    BiasReport report;
    if (flags->count() > 0) {
      report = captioning_report(CaptionFlagSet::load(co->flags), co->br_e_base);
    } else if (brn->count() > 0) {
      report.br_n = co->br_n;
      report.br_e = co->br_e;
      report.br_e_base = co->br_e_base;
      report.cbr = composite_bias_rate(co->br_n, co->br_e, co->br_e_base);
    } else {
      fail(ErrorCode::kUsage, "one of --flags or --br-n/--br-e is required");
    }
    fill_distance(report, *co);
    finish_report(ctx, report, co->name);
  });

  auto go = std::make_shared<EvalOptions>();
  auto* gen = eval->add_subcommand("generation", "Skew and misclassification rate");
  gen->add_option("--counts", go->counts, "Generation count TSV")->required();
  gen->add_option("--stereotype-a", go->stereotype_a, "Categories stereotyped toward side a")
      ->delimiter(',');
  gen->add_option("--stereotype-b", go->stereotype_b, "Categories stereotyped toward side b")
      ->delimiter(',');
  add_distance_options(gen, *go);
  actions.emplace_back(gen, [go](Context& ctx) {
    const auto counts = GenerationCountSet::load(go->counts);
    auto a = go->stereotype_a;
    auto b = go->stereotype_b;
    if (a.empty() && b.empty()) {
      const auto& ref = ReferenceConfig::shipped();
      for (const auto& c : counts.categories) {
        const auto g = ref.find_group(c.category_id);
        if (g == StereotypeGroup::kMale) a.push_back(c.category_id);
        if (g == StereotypeGroup::kFemale) b.push_back(c.category_id);
      }
      if (!a.empty() || !b.empty()) ctx.info("stereotype groups taken from the reference config");
    }
    auto report = generation_report(counts, a, b);
    fill_distance(report, *go);
    finish_report(ctx, report, go->name);
  });
}

// ----------------------------------------------------------------- audit

struct AuditOptions {
  std::string task;
  std::string report;
  std::string budget;
  double distance = 0.0;
  std::string name = "audit";
};

void register_audit(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& actions) {
  auto o = std::make_shared<AuditOptions>();
  auto* sub = app.add_subcommand("audit", "Check a report against a constraint budget");
  sub->add_option("--task", o->task, "Which constraint system to apply")
      ->required()
      ->check(CLI::IsMember({"captioning", "generation"}));
  sub->add_option("--report", o->report, "Report file from eval")->required();
  sub->add_option("--budget", o->budget, "Budget file (default: shipped)");
  auto* dist = sub->add_option("--distance", o->distance, "Semantic distance (overrides the report)");
  sub->add_option("--name", o->name, "Output base name");
  actions.emplace_back(sub, [o, dist](Context& ctx) {
    const auto report = BiasReport::from_keyvalue(read_text_file(o->report));
    const auto budget = o->budget.empty() ? ConstraintBudget::shipped() : ConstraintBudget::load(o->budget);
    double d = o->distance;
    if (dist->count() == 0) {
      if (!report.semantic_distance) {
        fail(ErrorCode::kValidation, "report has no semantic_distance; pass --distance");
      }
      d = *report.semantic_distance;
    }
    const auto result = o->task == "captioning" ? audit_captioning(report, d, budget)
                                               : audit_generation(report, d, budget);
    const auto file = ctx.path(o->name + ".audit");
    write_file_atomic(file, result.to_text());
    ctx.out() << result.to_text() << result.to_summary_line() << '\n';
    ctx.wrote(file);
    ctx.echo_config(o->name);
  });
}

// -------------------------------------------------------- expand-prompts

struct ExpandOptions {
  std::string mode = "gender";
  std::string split = "train";
  std::string catalog;
  bool validate = false;
  std::string name;
};

void register_expand(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& actions) {
  auto o = std::make_shared<ExpandOptions>();
  auto* sub = app.add_subcommand("expand-prompts", "Expand prompt templates over category lists");
  sub->add_option("--mode", o->mode, "Template family")->check(CLI::IsMember({"gender", "scene"}));
  sub->add_option("--split", o->split, "Category split")->check(CLI::IsMember({"train", "test"}));
  sub->add_option("--catalog", o->catalog, "Catalog file (default: shipped)");
  sub->add_flag("--validate", o->validate, "Report catalog violations");
  sub->add_option("--name", o->name, "Output base name (default prompts_<mode>_<split>)");
  actions.emplace_back(sub, [o](Context& ctx) {
    const auto catalog = o->catalog.empty() ? TemplateCatalog::shipped() : TemplateCatalog::load(o->catalog);
    const auto name = o->name.empty() ? "prompts_" + o->mode + "_" + o->split : o->name;
    if (o->validate) {
      const auto violations = validate_catalog(catalog);
      for (const auto& v : violations) {
        ctx.out() << "violation\t" << to_string(v.kind) << '\t' << v.detail << '\n';
      }
      if (!violations.empty()) ctx.warn(std::to_string(violations.size()) + " catalog violations");
    }
    const auto tuples = expand(catalog, parse_prompt_mode(o->mode), parse_prompt_split(o->split));
    const auto file = ctx.path(name + ".tsv");
    write_file_atomic(file, expansion_to_tsv(tuples));
    ctx.out() << "tuples\t" << tuples.size() << '\n';
    ctx.wrote(file);
    ctx.echo_config(name);
  });
}

int exit_code(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kUsage: return kExitUsage;
    case ErrorCategory::kIo: return kExitIo;
    case ErrorCategory::kNumeric: return kExitNumeric;
    case ErrorCategory::kValidation: return kExitValidation;
  }
  return kExitValidation;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Selective bias projection toolkit", "biopro"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Replay a config echo file");

  Globals globals;
  app.add_option("--seed", globals.seed, "Seed for every random stream");
  app.add_option("--precision", globals.precision, "On-disk value type")
      ->check(CLI::IsMember({"f32", "f64"}));
  app.add_option("--out-dir", globals.out_dir, "Output directory")
      ->envname("BIOPRO_OUT_DIR")
      ->required();
  app.add_option("--log-level", globals.log_level, "Diagnostics on stderr")
      ->check(CLI::IsMember({"error", "warn", "info", "debug"}));

  std::vector<std::pair<CLI::App*, Action>> actions;
  register_synth(app, actions);
  register_fit_subspace(app, actions);
  register_fit_policy(app, actions);
  register_scores(app, actions);
  register_project(app, actions);
  register_calibrate(app, actions);
  register_eval(app, actions);
  register_audit(app, actions);
  register_expand(app, actions);
  for (auto* sub : app.get_subcommands({})) {
    sub->configurable();
    for (auto* leaf : sub->get_subcommands({})) leaf->configurable();
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  Context ctx(app, globals, out, err);
  try {
    fs::create_directories(globals.out_dir);
    for (auto& [sub, action] : actions) {
      if (sub->parsed()) {
        action(ctx);
        return kExitOk;
      }
    }
    err << "error: no subcommand selected\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(category_of(e.code()));
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace biopro::cli
