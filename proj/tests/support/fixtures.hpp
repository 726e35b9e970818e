#pragma once

#include <string>

#include "metaq/cli.hpp"
#include "metaq/metaq.hpp"

namespace fx {

inline std::string path(const std::string& name) { return std::string(METAQ_FIXTURES) + "/" + name; }
inline std::string text(const std::string& name) { return metaq::cli::read_file(path(name)); }

inline metaq::io::LayeredDatabase layered(const std::string& schema, const std::string& instance) {
  metaq::io::LayeredDatabase db;
  metaq::io::parse_schema(text(schema), db.schema, db.layer);
  metaq::io::parse_instance(text(instance), db.instance, db.layer);
  return db;
}

inline metaq::io::LayeredDatabase car() { return layered("car.schema", "car.instance"); }

inline metaq::GraphDatabase graph(const std::string& name) { return metaq::io::load_graph_xml(text(name)); }

inline metaq::QueryPtr query(const std::string& name) { return metaq::io::parse_algebra_query(text(name)); }

}  // namespace fx
