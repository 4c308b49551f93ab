#pragma once

// cache backings for the precomputed operator families: eager (everything at
// construction), lazy (grow-only), lru:N and lfuda:N (bounded with eviction);
// concurrent requests for the same v compute the entry exactly once

#include <condition_variable>
#include <list>
#include <mutex>

#include "reduction.hpp"

namespace drz {

class EagerStore : public PepStoreBase {
 public:
  explicit EagerStore(const RuvContext& C) : tab_(&mono_table(C.X.nv(), C.X.d)) {
    entries_.reserve(tab_->size());
    for (int i = 0; i < tab_->size(); ++i)
      entries_.push_back(
          std::make_shared<const PepEntry>(build_ruv(C, tab_->mons[i])));
  }

  std::shared_ptr<const PepEntry> get(const Expo& v) override {
    std::lock_guard<std::mutex> lk(mu_);
    ++st_.hits;
    return entries_[tab_->rank(v)];
  }

  PepStats stats() const override {
    std::lock_guard<std::mutex> lk(mu_);
    return st_;
  }

 private:
  const MonoTable* tab_;
  std::vector<std::shared_ptr<const PepEntry>> entries_;
  mutable std::mutex mu_;
  PepStats st_;
};

namespace detail {

// shared machinery for the demand-filled stores: a slot is either ready or
// being computed by exactly one thread while the rest wait on the condition
struct PepSlot {
  std::shared_ptr<const PepEntry> entry;
  bool building = false;
};

class DemandStoreBase : public PepStoreBase {
 public:
  explicit DemandStoreBase(const RuvContext& C) : C_(&C) {}

  std::shared_ptr<const PepEntry> get(const Expo& v) override {
    u64 key = v.key();
    std::unique_lock<std::mutex> lk(mu_);
    for (;;) {
      auto it = slots_.find(key);
      if (it != slots_.end() && it->second.entry) {
        ++st_.hits;
        touch(key);
        return it->second.entry;
      }
      if (it != slots_.end() && it->second.building) {
        cv_.wait(lk);
        continue;
      }
      slots_[key].building = true;
      ++st_.misses;
      lk.unlock();
      auto built = std::make_shared<const PepEntry>(build_ruv(*C_, v));
      lk.lock();
      PepSlot& s = slots_[key];
      s.entry = built;
      s.building = false;
      admit(key);
      cv_.notify_all();
      return built;
    }
  }

  PepStats stats() const override {
    std::lock_guard<std::mutex> lk(mu_);
    return st_;
  }

 protected:
  // called under the lock when a key becomes resident / is re-used
  virtual void admit(u64 key) = 0;
  virtual void touch(u64 key) = 0;

  void evict(u64 key) {
    slots_.erase(key);
    ++st_.evictions;
  }

  const RuvContext* C_;
  mutable std::mutex mu_;
  std::condition_variable cv_;
  std::unordered_map<u64, PepSlot> slots_;
  PepStats st_;
};

}  // namespace detail

class LazyStore : public detail::DemandStoreBase {
 public:
  using DemandStoreBase::DemandStoreBase;

 protected:
  void admit(u64) override {}
  void touch(u64) override {}
};

class LruStore : public detail::DemandStoreBase {
 public:
  LruStore(const RuvContext& C, i64 capacity)
      : DemandStoreBase(C), cap_(capacity) {
    DRZ_REQUIRE(cap_ >= 1, "lru: capacity must be positive");
  }

 protected:
  void admit(u64 key) override {
    order_.push_front(key);
    where_[key] = order_.begin();
    while ((i64)order_.size() > cap_) {
      u64 victim = order_.back();
      order_.pop_back();
      where_.erase(victim);
      evict(victim);
    }
  }

  void touch(u64 key) override {
    auto it = where_.find(key);
    if (it == where_.end()) return;
    order_.splice(order_.begin(), order_, it->second);
  }

 private:
  i64 cap_;
  std::list<u64> order_;
  std::unordered_map<u64, std::list<u64>::iterator> where_;
};

// LFU with dynamic aging: priority = age at admission + use count, the age
// floor rising to each victim's priority so stale heavy hitters drain out
class LfudaStore : public detail::DemandStoreBase {
 public:
  LfudaStore(const RuvContext& C, i64 capacity)
      : DemandStoreBase(C), cap_(capacity) {
    DRZ_REQUIRE(cap_ >= 1, "lfuda: capacity must be positive");
  }

 protected:
  void admit(u64 key) override {
    meta_[key] = {1, age_ + 1};
    while ((i64)meta_.size() > cap_) {
      u64 victim = 0;
      i64 best = std::numeric_limits<i64>::max();
      for (auto& [k, m] : meta_)
        if (k != key && m.pri < best) {
          best = m.pri;
          victim = k;
        }
      age_ = std::max(age_, best);
      meta_.erase(victim);
      evict(victim);
    }
  }

  void touch(u64 key) override {
    auto it = meta_.find(key);
    if (it == meta_.end()) return;
    ++it->second.freq;
    it->second.pri = age_ + it->second.freq;
  }

 private:
  struct Meta {
    i64 freq = 0;
    i64 pri = 0;
  };
  i64 cap_;
  i64 age_ = 0;
  std::unordered_map<u64, Meta> meta_;
};

// backing spec: "eager", "lazy", "lru:N", "lfuda:N"
inline std::unique_ptr<PepStoreBase> make_pep_store(const std::string& spec,
                                                    const RuvContext& C) {
  auto colon = spec.find(':');
  std::string kind = spec.substr(0, colon);
  i64 cap = 0;
  if (colon != std::string::npos) {
    try {
      cap = std::stoll(spec.substr(colon + 1));
    } catch (const std::exception&) {
      DRZ_REQUIRE(false, "pep spec: bad capacity");
    }
  }
  if (kind == "eager") return std::make_unique<EagerStore>(C);
  if (kind == "lazy") return std::make_unique<LazyStore>(C);
  if (kind == "lru") return std::make_unique<LruStore>(C, cap);
  if (kind == "lfuda") return std::make_unique<LfudaStore>(C, cap);
  DRZ_REQUIRE(false, "pep spec: unknown backing");
  return nullptr;
}

}  // namespace drz
