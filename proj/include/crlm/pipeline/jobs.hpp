#pragma once

#include <condition_variable>
#include <cstdio>
#include <deque>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "crlm/error.hpp"

namespace crlm::pipeline {

// A second propagation job was submitted for a volume that already has one.
class Conflict : public Error {
 public:
  using Error::Error;
};

enum class JobStatus { queued, running, done, failed, canceled };

inline const char* job_status_name(JobStatus s) {
  switch (s) {
    case JobStatus::queued: return "queued";
    case JobStatus::running: return "running";
    case JobStatus::done: return "done";
    case JobStatus::failed: return "failed";
    case JobStatus::canceled: return "canceled";
  }
  return "?";
}

inline bool is_terminal(JobStatus s) { return s == JobStatus::done || s == JobStatus::failed || s == JobStatus::canceled; }

// queued -> running -> {done, failed, canceled}; queued -> canceled.
inline bool can_transition(JobStatus from, JobStatus to) {
  if (from == JobStatus::queued) return to == JobStatus::running || to == JobStatus::canceled;
  if (from == JobStatus::running) return is_terminal(to);
  return false;
}

struct JobRecord {
  std::string id;
  std::string kind;
  std::string volume_id;
  JobStatus status = JobStatus::queued;
  std::string inputs_digest;
  nlohmann::json outputs = nlohmann::json::object();
  std::string error;

  void advance(JobStatus to) {
    if (!can_transition(status, to))
      throw InvalidArgument(std::string("job ") + id + ": cannot go from " + job_status_name(status) + " to " +
                            job_status_name(to));
    status = to;
  }

  nlohmann::json to_json() const {
    nlohmann::json j = {{"id", id},         {"kind", kind},
                        {"volume_id", volume_id}, {"status", job_status_name(status)},
                        {"inputs_digest", inputs_digest}, {"outputs", outputs}};
    if (!error.empty()) j["error"] = error;
    return j;
  }
};

// Serialized registry plus a bounded worker pool. Work functions receive a
// stop token; throwing Canceled after a stop request marks the job canceled,
// any other exception marks it failed. `on_done` runs under the registry lock
// only when the job ends done, so a canceled job publishes nothing. At most
// one non-terminal job per volume.
class JobRegistry {
 public:
  using Work = std::function<nlohmann::json(std::stop_token)>;

  explicit JobRegistry(int workers = 1) {
    if (workers < 1) throw InvalidArgument("job registry: workers must be >= 1");
    for (int i = 0; i < workers; ++i) pool_.emplace_back([this](std::stop_token st) { worker(st); });
  }

  ~JobRegistry() {
    {
      std::lock_guard lk(mu_);
      for (auto& [id, e] : entries_) e.stop.request_stop();
    }
    for (auto& t : pool_) t.request_stop();
    cv_.notify_all();
    pool_.clear();
  }

  JobRegistry(const JobRegistry&) = delete;
  JobRegistry& operator=(const JobRegistry&) = delete;

  std::string submit(const std::string& kind, const std::string& volume_id, const std::string& inputs_digest, Work work,
                     std::function<void()> on_done = {}) {
    std::lock_guard lk(mu_);
    if (busy_.contains(volume_id)) throw Conflict("volume '" + volume_id + "' already has an active job");
    char buf[32];
    std::snprintf(buf, sizeof buf, "job-%06llu", static_cast<unsigned long long>(++counter_));
    Entry& e = entries_[buf];
    e.record = {buf, kind, volume_id, JobStatus::queued, inputs_digest, nlohmann::json::object(), ""};
    e.work = std::move(work);
    e.on_done = std::move(on_done);
    busy_.insert(volume_id);
    queue_.push_back(buf);
    cv_.notify_one();
    return buf;
  }

  std::optional<JobRecord> get(const std::string& id) const {
    std::lock_guard lk(mu_);
    auto it = entries_.find(id);
    if (it == entries_.end()) return std::nullopt;
    return it->second.record;
  }

  // Queued jobs are canceled at once; running jobs are asked to stop and
  // settle when their work returns.
  std::optional<JobRecord> cancel(const std::string& id) {
    std::lock_guard lk(mu_);
    auto it = entries_.find(id);
    if (it == entries_.end()) return std::nullopt;
    Entry& e = it->second;
    if (e.record.status == JobStatus::queued) {
      e.record.advance(JobStatus::canceled);
      busy_.erase(e.record.volume_id);
      std::erase(queue_, id);
      done_cv_.notify_all();
    } else if (e.record.status == JobStatus::running) {
      e.stop.request_stop();
    }
    return e.record;
  }

  // Blocks until the job is terminal or the timeout passes.
  std::optional<JobRecord> wait(const std::string& id, std::chrono::milliseconds timeout) const {
    std::unique_lock lk(mu_);
    done_cv_.wait_for(lk, timeout, [&] {
      auto it = entries_.find(id);
      return it == entries_.end() || is_terminal(it->second.record.status);
    });
    auto it = entries_.find(id);
    if (it == entries_.end()) return std::nullopt;
    return it->second.record;
  }

  bool volume_busy(const std::string& volume_id) const {
    std::lock_guard lk(mu_);
    return busy_.contains(volume_id);
  }

 private:
  struct Entry {
    JobRecord record;
    Work work;
    std::function<void()> on_done;
    std::stop_source stop;
  };

  void worker(std::stop_token st) {
    while (true) {
      std::string id;
      Work work;
      std::stop_token job_stop;
      {
        std::unique_lock lk(mu_);
        cv_.wait(lk, st, [&] { return !queue_.empty(); });
        if (st.stop_requested()) return;
        id = queue_.front();
        queue_.pop_front();
        Entry& e = entries_.at(id);
        e.record.advance(JobStatus::running);
        work = std::move(e.work);
        job_stop = e.stop.get_token();
      }
      JobStatus end = JobStatus::done;
      nlohmann::json outputs = nlohmann::json::object();
      std::string error;
      try {
        outputs = work(job_stop);
        if (job_stop.stop_requested()) end = JobStatus::canceled;
      } catch (const Canceled&) {
        end = JobStatus::canceled;
      } catch (const std::exception& ex) {
        end = JobStatus::failed;
        error = ex.what();
      }
      std::lock_guard lk(mu_);
      Entry& e = entries_.at(id);
      if (end == JobStatus::done && e.on_done) {
        try {
          e.on_done();
        } catch (const std::exception& ex) {
          end = JobStatus::failed;
          error = ex.what();
        }
      }
      if (end == JobStatus::done) e.record.outputs = std::move(outputs);
      e.record.advance(end);
      e.record.error = error;
      busy_.erase(e.record.volume_id);
      done_cv_.notify_all();
    }
  }

  mutable std::mutex mu_;
  std::condition_variable_any cv_;
  mutable std::condition_variable done_cv_;
  std::map<std::string, Entry> entries_;
  std::deque<std::string> queue_;
  std::set<std::string> busy_;
  std::uint64_t counter_ = 0;
  std::vector<std::jthread> pool_;
};

}  // namespace crlm::pipeline
