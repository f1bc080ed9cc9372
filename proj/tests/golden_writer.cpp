// Regenerates the golden prompt files after an intentional template change:
//
//   ./golden_writer <output_dir>
//
// Review the diff before committing — prompt_test compares bytes against
// these files.

#include <cstdio>
#include <string>

#include "knowrank/prompt.hpp"
#include "knowrank/util/io.hpp"
#include "prompt_fixture.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: golden_writer <output_dir>\n");
        return 1;
    }
    std::string out_dir = argv[1];
    namespace kr = knowrank;
    kr::util::ensure_dir(out_dir);

    auto catalog = kr::testfix::fixture_catalog();
    auto task = kr::testfix::fixture_task();
    for (auto id : kr::testfix::all_templates()) {
        auto pack = kr::testfix::fixture_pack(id);
        auto body = kr::prompt::load_template(TEMPLATES_DIR, id);
        auto rendered = kr::prompt::render_prompt(task, pack, body, catalog);
        std::string path = out_dir + "/" + kr::prompt::template_name(id) + ".txt";
        kr::util::write_file(path, rendered.text + "\n");
        std::printf("wrote %s (%d tokens)\n", path.c_str(), rendered.token_estimate);
    }
    return 0;
}
