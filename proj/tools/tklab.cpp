#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tklab/json_io.hpp"
#include "tklab/verify_suite.hpp"

namespace {

using tklab::Json;

constexpr int kExitOk = 0;
constexpr int kExitSuiteFailure = 1;
constexpr int kExitInputError = 2;
constexpr int kExitInconclusive = 3;

// Tolerances pinned in the library, echoed so every report is
// self-describing.
Json tolerance_echo() {
  Json t = Json::object();
  t["symmetry_abs"] = 1e-12;
  t["mass_abs"] = 1e-12;
  t["psd_eigenvalue_rel"] = 1e-10;
  t["search_accept"] = 1e-18;
  return t;
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  Json j;
  in >> j;
  return j;
}

void emit(const Json& report, const std::string& format,
          const std::function<std::string(const Json&)>& markdown) {
  if (format == "markdown")
    std::cout << markdown(report);
  else
    std::cout << report.dump(2) << "\n";
}

std::string finding_cell(const Json& f) {
  std::string s = f.at("status").get<std::string>();
  s += " [" + f.at("citation").get<std::string>() + "]";
  return s;
}

std::string markdown_verify(const Json& r) {
  std::ostringstream os;
  os << "# Verification suite\n\n";
  os << "| check | anchor | status | detail |\n|---|---|---|---|\n";
  int passed = 0;
  for (const Json& c : r.at("checks")) {
    os << "| " << c.at("name").get<std::string>() << " | "
       << c.at("anchor").get<std::string>() << " | "
       << (c.at("passed").get<bool>() ? "PASS" : "FAIL") << " | "
       << c.at("detail").get<std::string>() << " |\n";
    if (c.at("passed").get<bool>()) ++passed;
  }
  os << "\n" << passed << "/" << r.at("checks").size() << " checks passed.\n";
  return os.str();
}

std::string markdown_check(const Json& r) {
  std::ostringstream os;
  os << "# Product kernel property report\n\n## Components\n\n";
  os << "| component | characteristic | universal |\n|---|---|---|\n";
  const Json& comps = r.at("report").at("components");
  for (std::size_t i = 0; i < comps.size(); ++i)
    os << "| " << (i + 1) << " | " << finding_cell(comps[i].at("characteristic"))
       << " | " << finding_cell(comps[i].at("universal")) << " |\n";
  os << "\n## Product\n\n| property | verdict | rule | provenance |\n|---|---|---|---|\n";
  for (const auto& [name, f] : r.at("report").at("product").items()) {
    os << "| " << name << " | " << f.at("status").get<std::string>() << " | "
       << f.at("citation").get<std::string>() << " | "
       << f.at("provenance").get<std::string>() << " |\n";
  }
  os << "\n## Trace\n\n";
  for (const Json& line : r.at("report").at("trace"))
    os << "- " << line.get<std::string>() << "\n";
  if (r.contains("search")) {
    const Json& s = r.at("search");
    os << "\n## Search\n\n- status: " << s.at("status").get<std::string>()
       << "\n- rule: " << s.at("citation").get<std::string>() << "\n- note: "
       << s.at("note").get<std::string>() << "\n- evaluations: "
       << s.at("evaluations").dump() << "\n";
  }
  return os.str();
}

std::string markdown_search(const Json& r) {
  std::ostringstream os;
  const Json& s = r.at("outcome");
  os << "# Witness search\n\n";
  os << "- status: " << s.at("status").get<std::string>() << "\n";
  os << "- rule: " << s.at("citation").get<std::string>() << "\n";
  os << "- note: " << s.at("note").get<std::string>() << "\n";
  os << "- evaluations: " << s.at("evaluations").dump() << "\n";
  os << "- restarts: " << s.at("restarts").dump() << "\n";
  if (s.contains("witness")) {
    os << "\n## Witness\n\n```json\n" << s.at("witness").dump(2) << "\n```\n";
  }
  return os.str();
}

std::string markdown_hsic(const Json& r) {
  std::ostringstream os;
  const Json& t = r.at("result");
  os << "# Joint independence test\n\n";
  os << "| field | value |\n|---|---|\n";
  os << "| statistic | " << t.at("statistic").dump() << " |\n";
  os << "| p_value | " << t.at("p_value").dump() << " |\n";
  os << "| permutations | " << t.at("permutations").dump() << " |\n";
  os << "| seed | " << t.at("seed").dump() << " |\n";
  os << "| bandwidths | " << t.at("bandwidths").dump() << " |\n";
  return os.str();
}

// --- CSV + column groups ----------------------------------------------------

struct Csv {
  std::vector<std::vector<double>> rows;
  std::size_t cols = 0;
};

Csv load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  Csv csv;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) fields.push_back(cell);
    if (line.back() == ',') fields.push_back("");
    std::vector<double> row;
    bool numeric = true;
    for (const std::string& f : fields) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(f, &used));
        while (used < f.size() && std::isspace(static_cast<unsigned char>(f[used])))
          ++used;
        if (used != f.size()) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;  // header row
        csv.cols = fields.size();
        continue;
      }
      throw std::invalid_argument("non-numeric cell outside the header row");
    }
    if (first) {
      csv.cols = row.size();
      first = false;
    } else if (row.size() != csv.cols) {
      throw std::invalid_argument("ragged CSV: row " +
                                  std::to_string(csv.rows.size() + 1) +
                                  " has " + std::to_string(row.size()) +
                                  " cells, expected " + std::to_string(csv.cols));
    }
    csv.rows.push_back(std::move(row));
  }
  if (csv.rows.empty()) throw std::invalid_argument("CSV has no data rows");
  return csv;
}

// "0-1,2,3-5" -> column index groups; must partition 0..cols-1.
std::vector<std::vector<int>> parse_groups(const std::string& text,
                                           std::size_t cols) {
  std::vector<std::vector<int>> groups;
  std::vector<bool> seen(cols, false);
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) throw std::invalid_argument("empty group token");
    int lo = 0, hi = 0;
    const auto dash = tok.find('-');
    try {
      if (dash == std::string::npos) {
        lo = hi = std::stoi(tok);
      } else {
        lo = std::stoi(tok.substr(0, dash));
        hi = std::stoi(tok.substr(dash + 1));
      }
    } catch (const std::exception&) {
      throw std::invalid_argument("malformed group token '" + tok + "'");
    }
    if (lo < 0 || hi < lo || static_cast<std::size_t>(hi) >= cols)
      throw std::invalid_argument("group token '" + tok + "' out of range");
    std::vector<int> cols_here;
    for (int c = lo; c <= hi; ++c) {
      if (seen[static_cast<std::size_t>(c)])
        throw std::invalid_argument("overlapping groups at column " +
                                    std::to_string(c));
      seen[static_cast<std::size_t>(c)] = true;
      cols_here.push_back(c);
    }
    groups.push_back(std::move(cols_here));
  }
  for (std::size_t c = 0; c < cols; ++c)
    if (!seen[c])
      throw std::invalid_argument("groups do not cover column " +
                                  std::to_string(c));
  if (groups.empty()) throw std::invalid_argument("no groups given");
  return groups;
}

tklab::SampleBlock block_from_csv(const Csv& csv,
                                  const std::vector<std::vector<int>>& groups) {
  std::vector<std::vector<double>> data(groups.size());
  std::vector<int> widths(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    widths[g] = static_cast<int>(groups[g].size());
    data[g].reserve(csv.rows.size() * groups[g].size());
    for (const std::vector<double>& row : csv.rows)
      for (int c : groups[g]) data[g].push_back(row[static_cast<std::size_t>(c)]);
  }
  return tklab::SampleBlock(std::move(data), std::move(widths));
}

// --- subcommand bodies -------------------------------------------------------

int cmd_verify(const std::string& format, bool inject_fault) {
  tklab::VerifySuiteResult suite = tklab::run_verify_suite(inject_fault);
  Json r = Json::object();
  r["command"] = "verify-paper";
  Json cfg = Json::object();
  cfg["format"] = format;
  cfg["inject_fault"] = inject_fault;
  cfg["tolerances"] = tolerance_echo();
  r["config"] = std::move(cfg);
  Json checks = Json::array();
  for (const tklab::VerifyCheck& c : suite.checks) {
    Json cj = Json::object();
    cj["name"] = c.name;
    cj["anchor"] = c.anchor;
    cj["passed"] = c.passed;
    cj["detail"] = c.detail;
    checks.push_back(std::move(cj));
  }
  r["checks"] = std::move(checks);
  r["all_passed"] = suite.all_passed();
  emit(r, format, markdown_verify);
  if (!suite.all_passed()) {
    std::cerr << "FAILED: " << suite.first_failed()->name << "\n";
    return kExitSuiteFailure;
  }
  return kExitOk;
}

int cmd_check(const std::string& path, const std::string& format, bool search,
              long budget, std::uint64_t seed, const std::string& delta) {
  tklab::ProductKernelSpec spec = tklab::kernel_from_json(load_json_file(path));
  tklab::ProductReport report = spec.all_finite()
                                    ? tklab::decide_product_properties(spec)
                                    : tklab::classify_translation_invariant(spec);
  Json r = Json::object();
  r["command"] = "check";
  Json cfg = Json::object();
  cfg["input"] = path;
  cfg["format"] = format;
  cfg["search"] = search;
  if (search) {
    cfg["budget"] = budget;
    cfg["seed"] = seed;
    cfg["delta"] = delta;
  }
  cfg["tolerances"] = tolerance_echo();
  r["config"] = std::move(cfg);

  if (search && spec.all_finite()) {
    tklab::SearchOutcome out = tklab::search_I_witness(
        spec, budget, seed, tklab::rat_parse(delta));
    if (out.status == tklab::SearchOutcome::Status::witness_found &&
        out.witness) {
      tklab::Finding& f = report.product.at(tklab::ProductProperty::i_char);
      if (f.verdict == tklab::Verdict::undecided) {
        f.verdict = tklab::Verdict::fails;
        f.provenance = tklab::Provenance::search;
        f.rule = out.rule;
        f.note = out.note;
        f.witness = out.witness->witness;
        f.witness_class = out.witness->measure_class;
        f.witness_joint = out.witness->joint;
        report.trace.push_back(
            "I-char: Fails [search] witness found and re-verified exactly");
      }
    }
    r["report"] = tklab::product_report_to_json(report);
    r["search"] = tklab::search_outcome_to_json(out);
  } else {
    r["report"] = tklab::product_report_to_json(report);
  }
  emit(r, format, markdown_check);
  return kExitOk;
}

int cmd_witness_search(const std::string& path, const std::string& format,
                       long budget, std::uint64_t seed,
                       const std::string& delta) {
  tklab::ProductKernelSpec spec = tklab::kernel_from_json(load_json_file(path));
  if (!spec.all_finite())
    throw std::invalid_argument(
        "witness search requires a finite product kernel");
  tklab::SearchOutcome out =
      tklab::search_I_witness(spec, budget, seed, tklab::rat_parse(delta));
  Json r = Json::object();
  r["command"] = "witness-search";
  Json cfg = Json::object();
  cfg["input"] = path;
  cfg["format"] = format;
  cfg["budget"] = budget;
  cfg["seed"] = seed;
  cfg["delta"] = delta;
  cfg["tolerances"] = tolerance_echo();
  r["config"] = std::move(cfg);
  r["outcome"] = tklab::search_outcome_to_json(out);
  emit(r, format, markdown_search);
  return out.status == tklab::SearchOutcome::Status::inconclusive
             ? kExitInconclusive
             : kExitOk;
}

int cmd_hsic(const std::string& path, const std::string& format,
             const std::string& groups_text, const std::string& kernel_text,
             const std::vector<double>& bandwidths, long permutations,
             std::uint64_t seed) {
  const Csv csv = load_csv(path);
  std::vector<std::vector<int>> groups =
      groups_text.empty()
          ? [&] {
              std::vector<std::vector<int>> g;
              for (std::size_t c = 0; c < csv.cols; ++c)
                g.push_back({static_cast<int>(c)});
              return g;
            }()
          : parse_groups(groups_text, csv.cols);
  tklab::SampleBlock block = block_from_csv(csv, groups);

  // Kernel families: one name broadcast to all groups or a comma list.
  std::vector<std::string> fams;
  {
    std::stringstream ss(kernel_text);
    std::string tok;
    while (std::getline(ss, tok, ',')) fams.push_back(tok);
    if (fams.size() == 1)
      fams.assign(groups.size(), fams[0]);
    if (fams.size() != groups.size())
      throw std::invalid_argument("need one kernel family per group");
  }
  if (!bandwidths.empty() && bandwidths.size() != groups.size() &&
      bandwidths.size() != 1)
    throw std::invalid_argument("need one bandwidth per group");

  std::vector<tklab::ContinuousKernel> kernels;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    const int dim = static_cast<int>(groups[g].size());
    const std::string& fam = fams[g];
    if (fam == "constant") {
      kernels.push_back(tklab::ContinuousKernel::constant(dim));
    } else if (fam == "discrete-delta") {
      kernels.push_back(tklab::ContinuousKernel::discrete_delta(dim));
    } else if (fam == "gaussian" || fam == "laplacian") {
      double bw;
      if (!bandwidths.empty())
        bw = bandwidths.size() == 1 ? bandwidths[0] : bandwidths[g];
      else
        bw = tklab::median_heuristic(block, static_cast<int>(g));
      kernels.push_back(fam == "gaussian"
                            ? tklab::ContinuousKernel::gaussian(bw, dim)
                            : tklab::ContinuousKernel::laplacian(bw, dim));
    } else {
      throw std::invalid_argument("unknown kernel family '" + fam + "'");
    }
  }

  tklab::TestResult t = tklab::permutation_test(block, kernels, permutations, seed);
  Json r = Json::object();
  r["command"] = "hsic";
  Json cfg = Json::object();
  cfg["input"] = path;
  cfg["format"] = format;
  cfg["groups"] = groups_text.empty() ? Json("per-column") : Json(groups_text);
  cfg["kernels"] = fams;
  cfg["permutations"] = permutations;
  cfg["seed"] = seed;
  cfg["rows"] = block.rows();
  cfg["tolerances"] = tolerance_echo();
  r["config"] = std::move(cfg);
  r["result"] = tklab::test_result_to_json(t);
  emit(r, format, markdown_hsic);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact property lab for tensor-product kernels on finite spaces"};
  app.require_subcommand(1);

  std::string format = "json";
  app.add_option("--format", format, "output format")
      ->check(CLI::IsMember({"json", "markdown"}))
      ->capture_default_str();

  auto* verify = app.add_subcommand(
      "verify-paper", "run the exact reproduction suite (exit 1 on failure)");
  bool inject_fault = false;
  verify->add_flag("--inject-fault", inject_fault,
                   "corrupt one stored witness to exercise the failure path");

  auto* check = app.add_subcommand(
      "check", "decide the five product properties of a kernel spec");
  std::string check_path;
  check->add_option("kernel", check_path, "kernel JSON file")->required();
  bool check_search = false;
  check->add_flag("--search", check_search,
                  "run the witness search on an undecided I-char cell");
  long check_budget = 100000;
  check->add_option("--budget", check_budget, "search evaluation budget")
      ->capture_default_str();
  std::uint64_t check_seed = 1;
  check->add_option("--seed", check_seed, "search seed")->capture_default_str();
  std::string check_delta = "1/100";
  check->add_option("--delta", check_delta, "witness separation (rational)")
      ->capture_default_str();

  auto* wsearch = app.add_subcommand(
      "witness-search", "search for an exact dependence witness");
  std::string ws_path;
  wsearch->add_option("kernel", ws_path, "kernel JSON file")->required();
  long ws_budget = 100000;
  wsearch->add_option("--budget", ws_budget, "evaluation budget")
      ->capture_default_str();
  std::uint64_t ws_seed = 1;
  wsearch->add_option("--seed", ws_seed, "seed")->capture_default_str();
  std::string ws_delta = "1/100";
  wsearch->add_option("--delta", ws_delta, "witness separation (rational)")
      ->capture_default_str();

  auto* hsic = app.add_subcommand(
      "hsic", "permutation test of joint independence on CSV samples");
  std::string hsic_path;
  hsic->add_option("csv", hsic_path, "CSV file of samples")->required();
  std::string hsic_groups;
  hsic->add_option("--groups", hsic_groups,
                   "column groups, e.g. \"0-1,2,3-5\" (default: one per column)");
  std::string hsic_kernel = "gaussian";
  hsic->add_option("--kernel", hsic_kernel,
                   "kernel family per group (one name or comma list)")
      ->capture_default_str();
  std::vector<double> hsic_bandwidths;
  hsic->add_option("--bandwidth", hsic_bandwidths,
                   "bandwidths (default: median heuristic)");
  long hsic_perms = 199;
  hsic->add_option("--perms", hsic_perms, "permutation replicates")
      ->capture_default_str();
  std::uint64_t hsic_seed = 1;
  hsic->add_option("--seed", hsic_seed, "seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInputError;
  }

  try {
    if (verify->parsed()) return cmd_verify(format, inject_fault);
    if (check->parsed())
      return cmd_check(check_path, format, check_search, check_budget,
                       check_seed, check_delta);
    if (wsearch->parsed())
      return cmd_witness_search(ws_path, format, ws_budget, ws_seed, ws_delta);
    if (hsic->parsed())
      return cmd_hsic(hsic_path, format, hsic_groups, hsic_kernel,
                      hsic_bandwidths, hsic_perms, hsic_seed);
  } catch (const tklab::NotPsdError& e) {
    std::cerr << "input error: " << e.what();
    if (e.certificate.vector) {
      std::cerr << " certificate vector: [";
      for (std::size_t i = 0; i < e.certificate.vector->size(); ++i)
        std::cerr << (i ? "," : "") << (*e.certificate.vector)[i].str();
      std::cerr << "]";
    }
    std::cerr << "\n";
    return kExitInputError;
  } catch (const std::exception& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}
