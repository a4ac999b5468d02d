#include <map>
#include <set>
#include <sstream>

#include "sono/csv.hpp"
#include "sono/error.hpp"
#include "sono/stats.hpp"

namespace sono::stats {

namespace {

// measure -> key -> subject -> value
using Cells = std::map<std::string, std::map<std::string, double>>;

std::string label(std::string_view method, std::initializer_list<std::pair<const char*, std::string>> parts) {
  std::string out(method);
  out += '[';
  bool first = true;
  for (const auto& [k, v] : parts) {
    if (!first) out += ';';
    first = false;
    out += k;
    out += '=';
    out += v;
  }
  out += ']';
  return out;
}

void insert_cell(std::map<std::string, double>& by_subject, const Observation& o) {
  if (!by_subject.emplace(o.subject, o.value).second) {
    fail(ErrorCode::InvalidArgument, "duplicate observation for subject '" + o.subject +
                                         "', condition '" + o.condition + "', phase '" + o.phase +
                                         "', measure '" + o.measure + "'");
  }
}

std::vector<double> values_of(const std::map<std::string, double>& by_subject) {
  std::vector<double> out;
  for (const auto& [s, v] : by_subject) out.push_back(v);
  return out;
}

ResultRow row_of(const TestResult& r, std::string method) {
  return {std::move(method), r.statistic, r.df, r.p_value, r.effect_size};
}

void pairwise_rows(std::vector<ResultRow>& out, const std::vector<PairwiseResult>& pairs,
                   const std::vector<std::string>& names, const std::string& measure,
                   const std::string& phase) {
  for (const auto& p : pairs) {
    out.push_back({label("dunn_sidak", {{"measure", measure},
                                        {"phase", phase},
                                        {"pair", names[p.first] + " vs " + names[p.second]}}),
                   p.z, std::nullopt, p.p_adjusted, std::nullopt});
  }
}

}  // namespace

std::vector<Observation> parse_long_csv(std::string_view text) {
  const csv::Table t = csv::parse(text);
  const auto cs = t.column("subject");
  const auto cc = t.column("condition");
  const auto cp = t.column("phase");
  const auto cm = t.column("measure");
  const auto cv = t.column("value");
  std::vector<Observation> out;
  for (const auto& row : t.rows) {
    out.push_back({row.fields[cs], row.fields[cc], row.fields[cp], row.fields[cm],
                   csv::to_double(row.fields[cv], row.line)});
  }
  return out;
}

std::string_view to_string(Design d) {
  switch (d) {
    case Design::Wilcoxon: return "wilcoxon";
    case Design::Kruskal: return "kruskal";
    case Design::Friedman: return "friedman";
    case Design::Shapiro: return "shapiro";
  }
  return "friedman";
}

Design design_from_string(std::string_view name) {
  if (name == "wilcoxon") return Design::Wilcoxon;
  if (name == "kruskal") return Design::Kruskal;
  if (name == "friedman") return Design::Friedman;
  if (name == "shapiro") return Design::Shapiro;
  fail(ErrorCode::InvalidArgument, "unknown design '" + std::string(name) + "'");
}

std::vector<ResultRow> run_design(const std::vector<Observation>& data, Design design) {
  if (data.empty()) fail(ErrorCode::InvalidArgument, "no observations");
  // measure -> (condition, phase) -> subject -> value
  std::map<std::string, std::map<std::pair<std::string, std::string>, std::map<std::string, double>>>
      table;
  for (const auto& o : data) insert_cell(table[o.measure][{o.condition, o.phase}], o);

  std::vector<ResultRow> out;
  for (const auto& [measure, cells] : table) {
    std::set<std::string> conditions;
    std::set<std::string> phases;
    for (const auto& [key, v] : cells) {
      conditions.insert(key.first);
      phases.insert(key.second);
    }
    switch (design) {
      case Design::Wilcoxon:
        for (const auto& c : conditions) {
          std::vector<std::string> ps;
          for (const auto& p : phases) {
            if (cells.count({c, p})) ps.push_back(p);
          }
          if (ps.size() != 2) {
            fail(ErrorCode::InvalidArgument, "wilcoxon needs exactly two phases for condition '" +
                                                 c + "', measure '" + measure + "'");
          }
          const auto& first = cells.at({c, ps[0]});
          const auto& second = cells.at({c, ps[1]});
          std::vector<double> a;
          std::vector<double> b;
          for (const auto& [subject, v] : first) {
            const auto it = second.find(subject);
            if (it == second.end()) {
              fail(ErrorCode::InvalidArgument, "subject '" + subject + "' lacks phase '" + ps[1] +
                                                   "' for condition '" + c + "'");
            }
            a.push_back(v);
            b.push_back(it->second);
          }
          if (a.size() != second.size()) {
            fail(ErrorCode::InvalidArgument, "unpaired subjects in condition '" + c + "'");
          }
          const TestResult r = wilcoxon_signed_rank(a, b);
          const std::string pair = ps[0] + " vs " + ps[1];
          out.push_back(row_of(r, label(r.method, {{"measure", measure}, {"condition", c}, {"pair", pair}})));
          out.push_back({label("wilcoxon_z", {{"measure", measure}, {"condition", c}, {"pair", pair}}),
                         *r.z, std::nullopt, r.p_value, r.effect_size});
        }
        break;
      case Design::Kruskal:
        for (const auto& p : phases) {
          GroupedSample groups;
          std::vector<std::string> names;
          for (const auto& c : conditions) {
            const auto it = cells.find({c, p});
            if (it == cells.end()) continue;
            groups.push_back(values_of(it->second));
            names.push_back(c);
          }
          out.push_back(row_of(kruskal_wallis(groups), label("kruskal_wallis", {{"measure", measure}, {"phase", p}})));
          pairwise_rows(out, dunn_sidak(groups), names, measure, p);
        }
        break;
      case Design::Friedman:
        for (const auto& p : phases) {
          std::vector<std::string> names;
          std::set<std::string> subjects;
          for (const auto& c : conditions) {
            const auto it = cells.find({c, p});
            if (it == cells.end()) continue;
            names.push_back(c);
            for (const auto& [s, v] : it->second) subjects.insert(s);
          }
          BlockedSample rows;
          for (const auto& s : subjects) {
            std::vector<double> row;
            for (const auto& c : names) {
              const auto& by_subject = cells.at({c, p});
              const auto it = by_subject.find(s);
              if (it == by_subject.end()) {
                fail(ErrorCode::InvalidArgument, "subject '" + s + "' has no value for condition '" +
                                                     c + "', phase '" + p + "'");
              }
              row.push_back(it->second);
            }
            rows.push_back(std::move(row));
          }
          out.push_back(row_of(friedman(rows), label("friedman", {{"measure", measure}, {"phase", p}})));
          pairwise_rows(out, dunn_sidak_blocked(rows), names, measure, p);
        }
        break;
      case Design::Shapiro:
        for (const auto& [key, by_subject] : cells) {
          out.push_back(row_of(shapiro_wilk(values_of(by_subject)),
                               label("shapiro_wilk", {{"measure", measure},
                                                      {"condition", key.first},
                                                      {"phase", key.second}})));
        }
        break;
    }
  }
  return out;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream out;
  out << "method,statistic,df,p,effect_size\n";
  for (const auto& r : rows) {
    out << r.method << ',' << csv::format_double(r.statistic) << ','
        << (r.df ? csv::format_double(*r.df) : "") << ',' << csv::format_double(r.p) << ','
        << (r.effect_size ? csv::format_double(*r.effect_size) : "") << '\n';
  }
  return out.str();
}

}  // namespace sono::stats
