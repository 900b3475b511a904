#include <stdexcept>
#include <string>

#include <fmt/format.h>
#include <zlib.h>

#include "vaoi/kernel.hpp"

namespace vaoi {

void export_kernel_csv_gz(const TransitionKernel& kernel, const std::filesystem::path& path) {
    gzFile f = gzopen(path.string().c_str(), "wb");
    if (f == nullptr) throw std::runtime_error("cannot open " + path.string());

    auto put = [&](const std::string& s) {
        if (gzwrite(f, s.data(), static_cast<unsigned>(s.size())) != static_cast<int>(s.size())) {
            gzclose(f);
            throw std::runtime_error("write failed: " + path.string());
        }
    };

    put("state_index,action,next_state_index,probability\n");
    fmt::memory_buffer buf;
    for (std::size_t s = 0; s < kernel.num_states(); ++s) {
        for (Action a : {Action::Cached, Action::Fresh}) {
            const auto next = kernel.successors(s, a);
            const auto prob = kernel.probabilities(s, a);
            for (std::size_t i = 0; i < next.size(); ++i)
                fmt::format_to(std::back_inserter(buf), "{},{},{},{:.17g}\n", s,
                               static_cast<int>(a), next[i], prob[i]);
        }
        if (buf.size() > (1u << 20)) {
            put(fmt::to_string(buf));
            buf.clear();
        }
    }
    put(fmt::to_string(buf));
    if (gzclose(f) != Z_OK) throw std::runtime_error("close failed: " + path.string());
}

}  // namespace vaoi
