// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <set>
#include <thread>

#include "tarfas/annotator.hpp"
#include "tarfas/error.hpp"

namespace tarfas::annotator {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr int kMaxAttempts = 2;
constexpr std::string_view kStarted = "Started";

std::string dump_line(const ordered_json& j) {
  return j.dump(-1, ' ', false, json::error_handler_t::replace);
}

struct JournalState {
  int started = 0;
  std::optional<Disposition> last;
  bool terminal() const {
    return last && (*last == Disposition::Accepted || *last == Disposition::NeedsManualReview ||
                    *last == Disposition::BadCase);
  }
};

std::map<std::string, JournalState> read_journal(const std::filesystem::path& path) {
  std::map<std::string, JournalState> state;
  std::ifstream in(path);
  if (!in) return state;
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(std::move(line));
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = json::parse(lines[i], nullptr, false);
    const bool shaped = !j.is_discarded() && j.is_object() && j.contains("sample_id") &&
                        j["sample_id"].is_string() && j.contains("disposition") && j["disposition"].is_string();
    if (!shaped) {
      // A torn final line from an interrupted run is ignored.
      if (i + 1 == lines.size()) break;
      throw Error(Errc::Decode, path.string() + ":" + std::to_string(i + 1) + ": malformed journal line");
    }
    auto& entry = state[j["sample_id"].get<std::string>()];
    const auto& disposition = j["disposition"].get_ref<const std::string&>();
    if (disposition == kStarted) {
      ++entry.started;
    } else if (const auto d = parse_disposition(disposition)) {
      entry.last = *d;
    } else {
      throw Error(Errc::Decode, path.string() + ":" + std::to_string(i + 1) + ": unknown disposition");
    }
  }
  return state;
}

std::vector<std::string> failure_reasons(const VerificationReport& r) {
  std::vector<std::string> reasons;
  if (!r.correct) reasons.emplace_back("final answer does not match the label");
  reasons.insert(reasons.end(), r.format_violations.begin(), r.format_violations.end());
  for (const auto& leak : r.leaks) {
    reasons.push_back("leak (" + leak.rule + ") in turn " + std::to_string(leak.turn) + ": " + leak.span);
  }
  return reasons;
}

struct Event {
  enum class Kind { Started, Finished, Fatal } kind = Kind::Started;
  std::size_t index = 0;
  int attempt = 1;
  Disposition disposition = Disposition::NeedsReannotation;
  std::optional<Trajectory> trajectory;
  std::vector<std::string> reasons;
  std::exception_ptr error;
};

class EventQueue {
 public:
  void push(Event e) {
    {
      std::lock_guard lock(mu_);
      events_.push_back(std::move(e));
    }
    cv_.notify_one();
  }
  void producer_done() {
    {
      std::lock_guard lock(mu_);
      ++done_;
    }
    cv_.notify_one();
  }
  /// Blocks until an event arrives or all `producers` have finished.
  std::optional<Event> pop(int producers) {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !events_.empty() || done_ == producers; });
    if (events_.empty()) return std::nullopt;
    Event e = std::move(events_.front());
    events_.pop_front();
    return e;
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Event> events_;
  int done_ = 0;
};

void append_line(std::ofstream& out, const std::string& line, const std::filesystem::path& path) {
  out << line << '\n';
  out.flush();
  if (!out) throw Error(Errc::Io, "write to '" + path.string() + "' failed");
}

// Cuts a partial last line left by an interrupted writer so appends start on a fresh line.
void drop_torn_tail(const std::filesystem::path& path) {
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec || size == 0) return;
  std::ifstream in(path, std::ios::binary);
  std::string data(size, '\0');
  in.read(data.data(), static_cast<std::streamsize>(size));
  if (data.back() == '\n') return;
  const auto keep = data.find_last_of('\n');
  std::filesystem::resize_file(path, keep == std::string::npos ? 0 : keep + 1, ec);
  if (ec) throw Error(Errc::Io, "cannot repair '" + path.string() + "': " + ec.message());
}

std::ofstream open_output(const std::filesystem::path& path, bool append) {
  if (append) drop_torn_tail(path);
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot open '" + path.string() + "' for writing");
  return out;
}

void tally_trajectories(const std::filesystem::path& path, PipelineStats& stats, std::size_t& turns,
                        std::size_t& count) {
  std::ifstream in(path);
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const Trajectory t = trajectory::parse_trajectory(line);
    turns += t.turns.size();
    ++count;
    for (const auto& r : t.tool_results) {
      if (r.ok) ++stats.tool_histogram[vistools::index_of(r.tool)];
    }
  }
}

std::size_t count_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) ++n;
  }
  return n;
}

}  // namespace

std::uint64_t attempt_seed(std::uint64_t base, std::string_view sample_id, int attempt) noexcept {
  // FNV-1a over the id, then a splitmix64 finalizer.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : sample_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::uint64_t z = h ^ (base + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(attempt));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ordered_json stats_to_json(const PipelineStats& s) {
  ordered_json j;
  j["samples"] = s.samples;
  j["accepted"] = s.accepted;
  j["review"] = s.review;
  j["badcase"] = s.badcase;
  j["reannotated"] = s.reannotated;
  j["resumed"] = s.resumed;
  ordered_json hist = ordered_json::object();
  for (auto id : vistools::kAllTools) hist[std::string(vistools::tool_name(id))] = s.tool_histogram[vistools::index_of(id)];
  j["tool_histogram"] = std::move(hist);
  j["mean_turns"] = s.mean_turns;
  return j;
}

PipelineStats run_pipeline(const std::vector<Sample>& samples, chat::ChatClient& client,
                           const expert::ExpertSet& experts, const PipelineConfig& cfg,
                           const std::filesystem::path& out_dir) {
  if (cfg.workers < 1) throw Error(Errc::Config, "workers must be at least 1");
  expert::require_complete(experts);
  {
    std::set<std::string> ids;
    for (const auto& s : samples) {
      if (!ids.insert(s.id).second) throw Error(Errc::InvalidArgument, "duplicate sample id '" + s.id + "'");
    }
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::Io, "cannot create '" + out_dir.string() + "': " + ec.message());

  const auto journal_path = out_dir / "journal.jsonl";
  const auto accepted_path = out_dir / "accepted.jsonl";
  const auto review_path = out_dir / "review.jsonl";
  const auto badcase_path = out_dir / "badcase.jsonl";
  const bool resuming = std::filesystem::exists(journal_path);
  const auto journal_state = read_journal(journal_path);

  std::ofstream journal = open_output(journal_path, true);
  std::ofstream accepted = open_output(accepted_path, resuming);
  std::ofstream review = open_output(review_path, resuming);
  std::ofstream badcase = open_output(badcase_path, resuming);

  PipelineStats stats;
  stats.samples = samples.size();

  auto write_journal = [&](const std::string& id, int attempt, std::string_view disposition) {
    append_line(journal, dump_line(ordered_json{{"sample_id", id}, {"attempt", attempt}, {"disposition", disposition}}),
                journal_path);
  };
  auto write_badcase = [&](const std::string& id, int attempts, const std::vector<std::string>& reasons,
                           const std::optional<Trajectory>& t) {
    ordered_json j;
    j["sample_id"] = id;
    j["attempts"] = attempts;
    j["reasons"] = reasons;
    j["trajectory"] = t ? trajectory::trajectory_to_json(*t) : ordered_json(nullptr);
    append_line(badcase, dump_line(j), badcase_path);
  };

  struct Job {
    std::size_t index;
    int first_attempt;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto it = journal_state.find(samples[i].id);
    if (it == journal_state.end()) {
      jobs.push_back({i, 1});
      continue;
    }
    const JournalState& st = it->second;
    if (st.terminal()) {
      ++stats.resumed;
      continue;
    }
    if (st.started >= kMaxAttempts) {
      ++stats.resumed;
      write_journal(samples[i].id, st.started, to_string(Disposition::BadCase));
      write_badcase(samples[i].id, st.started, {"attempt limit reached before resume"}, std::nullopt);
      continue;
    }
    jobs.push_back({i, st.started + 1});
  }

  EventQueue queue;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  AnnotateConfig annotate_cfg = cfg.annotate;
  if (cfg.save_renders) annotate_cfg.render_dir = out_dir / "renders";

  auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size() && !abort; j = next++) {
      const Sample& s = samples[jobs[j].index];
      for (int attempt = jobs[j].first_attempt; attempt <= kMaxAttempts; ++attempt) {
        queue.push({Event::Kind::Started, jobs[j].index, attempt, {}, std::nullopt, {}, nullptr});
        Event done{Event::Kind::Finished, jobs[j].index, attempt, {}, std::nullopt, {}, nullptr};
        try {
          chat::ChatOptions opts;
          opts.sample_id = s.id;
          opts.attempt = attempt;
          opts.seed = attempt_seed(cfg.seed, s.id, attempt);
          Trajectory t = annotate_sample(s, client, experts, annotate_cfg, opts);
          const VerificationReport report = verify(t, s, cfg.rules);
          done.disposition = report.disposition;
          done.reasons = failure_reasons(report);
          done.trajectory = std::move(t);
        } catch (const Error& e) {
          if (e.code() == Errc::Auth) {
            abort = true;
            queue.push({Event::Kind::Fatal, jobs[j].index, attempt, {}, std::nullopt, {}, std::current_exception()});
            queue.producer_done();
            return;
          }
          done.disposition = Disposition::NeedsReannotation;
          done.reasons = {std::string(to_string(e.code())) + ": " + e.what()};
        }
        const bool failed = done.disposition == Disposition::NeedsReannotation;
        if (failed && attempt == kMaxAttempts) done.disposition = Disposition::BadCase;
        queue.push(std::move(done));
        if (!failed) break;
      }
    }
    queue.producer_done();
  };

  const int width = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(cfg.workers),
                                                           std::max<std::size_t>(jobs.size(), 1)));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(width));
  for (int i = 0; i < width; ++i) pool.emplace_back(worker);

  std::exception_ptr fatal;
  try {
    while (auto event = queue.pop(width)) {
      const Sample& s = samples[event->index];
      switch (event->kind) {
        case Event::Kind::Started:
          write_journal(s.id, event->attempt, kStarted);
          break;
        case Event::Kind::Fatal:
          if (!fatal) fatal = event->error;
          break;
        case Event::Kind::Finished:
          if (event->disposition == Disposition::Accepted) {
            append_line(accepted, trajectory::serialize_trajectory(*event->trajectory), accepted_path);
          } else if (event->disposition == Disposition::NeedsManualReview) {
            append_line(review, trajectory::serialize_trajectory(*event->trajectory), review_path);
          } else if (event->disposition == Disposition::BadCase) {
            write_badcase(s.id, event->attempt, event->reasons, event->trajectory);
          }
          write_journal(s.id, event->attempt, to_string(event->disposition));
          break;
      }
    }
  } catch (...) {
    abort = true;
    for (auto& th : pool) th.join();
    throw;
  }
  for (auto& th : pool) th.join();
  journal.close();
  accepted.close();
  review.close();
  badcase.close();
  if (fatal) std::rethrow_exception(fatal);

  std::size_t turns = 0;
  std::size_t count = 0;
  tally_trajectories(accepted_path, stats, turns, count);
  tally_trajectories(review_path, stats, turns, count);
  stats.accepted = count_lines(accepted_path);
  stats.review = count_lines(review_path);
  stats.badcase = count_lines(badcase_path);
  stats.mean_turns = count == 0 ? 0.0 : static_cast<double>(turns) / static_cast<double>(count);
  for (const auto& [id, st] : read_journal(journal_path)) {
    if (st.started >= 2) ++stats.reannotated;
  }

  std::ofstream stats_out(out_dir / "stats.json", std::ios::trunc);
  if (!stats_out) throw Error(Errc::Io, "cannot write stats.json");
  stats_out << stats_to_json(stats).dump(2) << '\n';
  return stats;
}

}  // namespace tarfas::annotator
