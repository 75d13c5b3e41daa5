#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "dagfl/dataset.hpp"
#include "dagfl/errors.hpp"
#include "dagfl/metrics.hpp"
#include "dagfl/simulation.hpp"

namespace dagfl {

inline std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.10g", value);
  return buffer;
}

// Per-client rows for one round: round, client_id, published, accuracy,
// loss, walk_duration_s. Baseline runs prepend an algorithm column.
class ClientCsvWriter {
 public:
  ClientCsvWriter(std::ostream& out, std::string algorithm = "")
      : out_(out), algorithm_(std::move(algorithm)) {
    if (!algorithm_.empty()) out_ << "algorithm,";
    out_ << "round,client_id,published,accuracy,loss,walk_duration_s\n";
  }

  void write_round(const RoundRecord& record) {
    for (const ClientRoundRecord& entry : record.clients) {
      if (!algorithm_.empty()) out_ << algorithm_ << ',';
      out_ << record.round << ',' << entry.client_id << ',' << (entry.published ? 1 : 0)
           << ',' << format_double(entry.accuracy) << ',' << format_double(entry.loss)
           << ',' << format_double(entry.walk_duration_s) << '\n';
    }
  }

 private:
  std::ostream& out_;
  std::string algorithm_;
};

class AggregateCsvWriter {
 public:
  AggregateCsvWriter(std::ostream& out, std::string algorithm = "")
      : out_(out), algorithm_(std::move(algorithm)) {
    if (!algorithm_.empty()) out_ << "algorithm,";
    out_ << "round,mean_accuracy,mean_loss";
    if (algorithm_.empty()) out_ << ",tips_count";
    out_ << '\n';
  }

  void write_round(const RoundRecord& record) {
    if (!algorithm_.empty()) out_ << algorithm_ << ',';
    out_ << record.round << ',' << format_double(record.mean_accuracy) << ','
         << format_double(record.mean_loss);
    if (algorithm_.empty()) out_ << ',' << record.tips_count;
    out_ << '\n';
  }

 private:
  std::ostream& out_;
  std::string algorithm_;
};

struct RoundMetrics {
  int round = 0;
  double modularity = std::numeric_limits<double>::quiet_NaN();
  std::size_t num_partitions = 0;
  double misclassification = std::numeric_limits<double>::quiet_NaN();
  double approval_pureness = std::numeric_limits<double>::quiet_NaN();
  double approved_poisoned = std::numeric_limits<double>::quiet_NaN();
  double flipped_rate_benign = std::numeric_limits<double>::quiet_NaN();
  double flipped_rate_poisoned = std::numeric_limits<double>::quiet_NaN();
};

// Derives the per-round specialization/robustness metrics from the DAG state
// and the round's records.
inline RoundMetrics compute_round_metrics(int round, const Dag& dag,
                                          const RoundRecord& record,
                                          const std::vector<ClientDataset>& clients) {
  RoundMetrics metrics;
  metrics.round = round;

  std::map<int, int> clusters;
  for (const ClientDataset& c : clients) clusters[c.client_id] = c.cluster;

  const ClientGraph graph = build_client_graph(dag);
  if (graph.has_edges()) {
    const Partition partition = louvain(graph);
    metrics.modularity = modularity(graph, partition);
    metrics.num_partitions = partition.num_communities();
    metrics.misclassification = misclassification_fraction(partition, clusters);
    metrics.approval_pureness = approval_pureness(dag, clusters);
  }

  double poisoned_sum = 0.0;
  std::size_t poisoned_n = 0;
  double benign_rate_sum = 0.0, poisoned_rate_sum = 0.0;
  std::size_t benign_rate_n = 0, poisoned_rate_n = 0;
  for (const ClientRoundRecord& entry : record.clients) {
    poisoned_sum += entry.approved_poisoned;
    ++poisoned_n;
    if (!std::isnan(entry.flipped_rate)) {
      if (entry.client_poisoned) {
        poisoned_rate_sum += entry.flipped_rate;
        ++poisoned_rate_n;
      } else {
        benign_rate_sum += entry.flipped_rate;
        ++benign_rate_n;
      }
    }
  }
  if (poisoned_n > 0) {
    metrics.approved_poisoned = poisoned_sum / static_cast<double>(poisoned_n);
  }
  if (benign_rate_n > 0) {
    metrics.flipped_rate_benign = benign_rate_sum / static_cast<double>(benign_rate_n);
  }
  if (poisoned_rate_n > 0) {
    metrics.flipped_rate_poisoned = poisoned_rate_sum / static_cast<double>(poisoned_rate_n);
  }
  return metrics;
}

class MetricsCsvWriter {
 public:
  explicit MetricsCsvWriter(std::ostream& out) : out_(out) {
    out_ << "round,modularity,num_partitions,misclassification,approval_pureness,"
            "approved_poisoned,flipped_rate_benign,flipped_rate_poisoned\n";
  }

  void write(const RoundMetrics& m) {
    out_ << m.round << ',' << format_double(m.modularity) << ',' << m.num_partitions << ','
         << format_double(m.misclassification) << ',' << format_double(m.approval_pureness)
         << ',' << format_double(m.approved_poisoned) << ','
         << format_double(m.flipped_rate_benign) << ','
         << format_double(m.flipped_rate_poisoned) << '\n';
  }

 private:
  std::ostream& out_;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  }
};

inline CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  return table;
}

}  // namespace dagfl
