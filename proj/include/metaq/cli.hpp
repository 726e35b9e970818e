#pragma once

// The metaq command-line driver. run() is the whole program minus main(),
// so tests can drive it with string streams.
//
// Exit codes: 0 success, 1 findings (only with --fail-on-findings),
// 2 usage, parse, schema or evaluation errors.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "metaq/automata.hpp"
#include "metaq/chase.hpp"
#include "metaq/io/algebra_text.hpp"
#include "metaq/io/constraints.hpp"
#include "metaq/io/schema_text.hpp"
#include "metaq/io/xml_graph.hpp"
#include "metaq/optimize.hpp"

namespace metaq::cli {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace detail {

// ParseError carries no file name; prefix it here.
template <class F>
auto parsing(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const ParseError& e) {
    throw Error(path + ":" + e.what());
  }
}

inline void print_report(const Report& r, std::ostream& out) {
  std::vector<std::string> lines;
  for (const auto& f : r.findings()) lines.push_back(f.code + ": " + f.message);
  std::sort(lines.begin(), lines.end());
  for (const auto& l : lines) out << l << "\n";
}

inline void print_rows(const TupleSet& t, std::ostream& out) {
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? " " : "") << row[i];
    out << "\n";
  }
}

inline io::LayeredDatabase load_database(const std::string& schema_path, const std::string& instance_path,
                                         std::ostream& err) {
  std::string st = read_file(schema_path);
  std::string it = read_file(instance_path);
  io::LayeredDatabase db;
  parsing(schema_path, [&] {
    io::parse_schema(st, db.schema, db.layer);
    return 0;
  });
  parsing(instance_path, [&] {
    io::parse_instance(it, db.instance, db.layer);
    return 0;
  });
  Report report = io::validate_database(db);
  if (!report.empty()) {
    print_report(report, err);
    throw SchemaError(instance_path + " does not validate against " + schema_path);
  }
  return db;
}

inline Schema load_schema_only(const std::string& schema_path, DescriptionLayer& layer) {
  std::string st = read_file(schema_path);
  Schema s;
  parsing(schema_path, [&] {
    io::parse_schema(st, s, layer);
    return 0;
  });
  Report report = io::validate_schema(s);
  if (!report.empty()) throw SchemaError(schema_path + ": " + report.findings().front().message);
  return s;
}

inline QueryPtr load_query(const std::string& path) {
  std::string text = read_file(path);
  return parsing(path, [&] { return io::parse_algebra_query(text); });
}

inline GraphDatabase load_graph(const std::string& path) {
  std::string text = read_file(path);
  return parsing(path, [&] { return io::load_graph_xml(text); });
}

// --query takes a query string or the name of a file holding one.
inline PathQueryPtr load_path_query(const std::string& arg) {
  std::error_code ec;
  if (std::filesystem::is_regular_file(arg, ec)) {
    std::string text = read_file(arg);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
    return parsing(arg, [&] { return parse_path_query(text); });
  }
  return parse_path_query(arg);
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"metaq: query optimization with meta-level data", "metaq"};
  app.require_subcommand(1);

  std::string schema, instance, query, constraints, mode = "instance", meta, db, mu, dot, context, meta_tag;
  bool fail_on_findings = false, strict = false, import_meta = false;

  auto* validate = app.add_subcommand("validate", "check a schema and instance");
  validate->add_option("--schema", schema, "schema file")->required();
  validate->add_option("--instance", instance, "instance file")->required();
  validate->add_flag("--fail-on-findings", fail_on_findings, "exit 1 when the report is not empty");

  auto* rewrite = app.add_subcommand("rewrite-m", "print the description query M(Q)");
  rewrite->add_option("--schema", schema, "schema file")->required();
  rewrite->add_option("--query", query, "algebra query file")->required();

  auto* optimize = app.add_subcommand("optimize", "optimize a query with meta-level data");
  optimize->add_option("--schema", schema, "schema file")->required();
  optimize->add_option("--instance", instance, "instance file (its meta level is used)")->required();
  optimize->add_option("--query", query, "algebra query file")->required();
  optimize->add_option("--constraints", constraints, "implication constraints file");
  optimize->add_option("--mode", mode, "instance or constraint")->check(CLI::IsMember({"instance", "constraint"}));
  optimize->add_option("--meta-tag", meta_tag, "name of the meta instance in verdicts (default: instance file name)");
  optimize->add_flag("--fail-on-findings", fail_on_findings, "exit 1 when a subquery is unsatisfiable");

  auto* chase = app.add_subcommand("chase", "chase the merged form of a query");
  chase->add_option("--schema", schema, "schema file")->required();
  chase->add_option("--query", query, "algebra query file")->required();
  chase->add_option("--constraints", constraints, "implication constraints file")->required();
  chase->add_flag("--fail-on-findings", fail_on_findings, "exit 1 when the query is unsatisfiable");

  auto* eval = app.add_subcommand("eval", "evaluate an algebra query");
  eval->add_option("--schema", schema, "schema file")->required();
  eval->add_option("--instance", instance, "instance file")->required();
  eval->add_option("--query", query, "algebra query file")->required();

  auto* prune_cmd = app.add_subcommand("prune", "prune a path query with a meta graph");
  prune_cmd->add_option("--query", query, "path query or file")->required();
  prune_cmd->add_option("--meta", meta, "meta graph (XML)")->required();
  prune_cmd->add_flag("--import-meta-restrictions", import_meta, "copy meta attribute values into the query");
  prune_cmd->add_option("--dot", dot, "write the product automaton in DOT format");

  auto* graph_eval = app.add_subcommand("graph-eval", "evaluate a path query on a graph");
  graph_eval->add_option("--query", query, "path query or file")->required();
  graph_eval->add_option("--db", db, "graph (XML)")->required();
  graph_eval->add_option("--context", context, "start node (node id or XML id; default: root)");

  auto* check_sim = app.add_subcommand("check-sim", "check a description binding between graphs");
  check_sim->add_option("--db", db, "instance graph (XML)")->required();
  check_sim->add_option("--meta", meta, "meta graph (XML)")->required();
  check_sim->add_option("--mu", mu, "binding file")->required();
  check_sim->add_flag("--strict", strict, "also require agreeing attributes and bound roots");
  check_sim->add_flag("--fail-on-findings", fail_on_findings, "exit 1 when the report is not empty");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    if (validate->parsed()) {
      std::string st = read_file(schema), it = read_file(instance);
      io::LayeredDatabase dbase;
      detail::parsing(schema, [&] {
        io::parse_schema(st, dbase.schema, dbase.layer);
        return 0;
      });
      detail::parsing(instance, [&] {
        io::parse_instance(it, dbase.instance, dbase.layer);
        return 0;
      });
      Report report = io::validate_database(dbase);
      if (report.empty()) {
        out << "valid\n";
        return 0;
      }
      detail::print_report(report, out);
      return fail_on_findings ? 1 : 0;
    }

    if (rewrite->parsed()) {
      DescriptionLayer layer;
      Schema s = detail::load_schema_only(schema, layer);
      QueryPtr q = detail::load_query(query);
      out << io::print_algebra_query(m_rewrite(*q, s, layer)) << "\n";
      return 0;
    }

    if (optimize->parsed()) {
      io::LayeredDatabase dbase = detail::load_database(schema, instance, err);
      QueryPtr q = detail::load_query(query);
      OptimizeOptions opts;
      opts.mode = mode == "constraint" ? OptimizeMode::constraint : OptimizeMode::instance;
      if (opts.mode == OptimizeMode::constraint && constraints.empty())
        throw Error("--mode constraint needs --constraints");
      if (!constraints.empty()) {
        std::string text = read_file(constraints);
        opts.constraints = detail::parsing(constraints, [&] { return io::load_constraints(text); });
      }
      opts.meta_tag = meta_tag.empty() ? std::filesystem::path(instance).filename().string() : meta_tag;
      OptimizeResult r = optimize_with_meta(q, dbase.schema, dbase.instance, dbase.layer, opts);
      out << io::print_algebra_query(r.query) << "\n";
      bool unsat = false;
      for (const auto& v : r.verdicts) {
        out << to_string(v) << "\n";
        unsat = unsat || v.kind == "unsatisfiable";
      }
      return fail_on_findings && unsat ? 1 : 0;
    }

    if (chase->parsed()) {
      DescriptionLayer layer;
      Schema s = detail::load_schema_only(schema, layer);
      QueryPtr q = detail::load_query(query);
      std::string text = read_file(constraints);
      auto ics = detail::parsing(constraints, [&] { return io::load_constraints(text); });
      ConjunctiveQuery cq = to_conjunctive(*q, s, layer);
      ChaseResult r = chase_apply(cq, ics);
      out << "merged:  " << to_string(cq) << "\n";
      for (const auto& f : r.derived) out << "derived: " << to_string(f.atom()) << " by " << f.constraint_id << "\n";
      if (auto conflict = is_unsatisfiable(r.query)) {
        out << "unsatisfiable: " << to_string(conflict->first) << " vs " << to_string(conflict->second) << "\n";
        return fail_on_findings ? 1 : 0;
      }
      out << "chased:  " << to_string(r.query) << "\n";
      out << "reduced: " << to_string(eliminate_redundancy(r.query, layer)) << "\n";
      return 0;
    }

    if (eval->parsed()) {
      io::LayeredDatabase dbase = detail::load_database(schema, instance, err);
      QueryPtr q = detail::load_query(query);
      detail::print_rows(eval_algebra(*q, dbase.schema, dbase.instance, dbase.layer), out);
      return 0;
    }

    if (prune_cmd->parsed()) {
      PathQueryPtr q = detail::load_path_query(query);
      GraphDatabase m = detail::load_graph(meta);
      Report report = validate_graph(m);
      if (!report.empty()) {
        detail::print_report(report, err);
        throw Error(meta + " is not a valid graph database");
      }
      PruneOptions opts;
      opts.import_meta_restrictions = import_meta;
      if (!dot.empty()) {
        std::ofstream f(dot);
        if (!f) throw Error("cannot write " + dot);
        f << to_dot(trim(product(query_to_fsa(*q), graph_to_fsa(m), opts)));
      }
      PathQueryPtr pruned = prune(*q, m, opts);
      out << print_path_query(*pruned) << "\n";
      if (!is_standard(*pruned)) err << "note: the pruned query uses #self/#none\n";
      return 0;
    }

    if (graph_eval->parsed()) {
      PathQueryPtr q = detail::load_path_query(query);
      GraphDatabase g = detail::load_graph(db);
      std::string start = g.root();
      if (!context.empty()) {
        auto r = g.resolve(context);
        if (!r) throw Error("unknown node '" + context + "'");
        start = *r;
      }
      std::set<std::string> nodes = eval_path_query(*q, g, start);
      bool first = true;
      for (const auto& n : nodes) {
        out << (first ? "" : " ") << n;
        first = false;
      }
      out << "\n";
      return 0;
    }

    if (check_sim->parsed()) {
      GraphDatabase i = detail::load_graph(db);
      GraphDatabase m = detail::load_graph(meta);
      std::string text = read_file(mu);
      DescriptionBinding binding = detail::parsing(mu, [&] { return io::parse_binding(text, i, m); });
      Report report = validate_graph(i);
      report.merge(validate_graph(m));
      report.merge(check_description_binding(i, m, binding, strict));
      if (report.empty()) {
        out << "valid\n";
        return 0;
      }
      detail::print_report(report, out);
      return fail_on_findings ? 1 : 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, out, err);
}

}  // namespace metaq::cli
