#include "neggen/prompts.hpp"

#include <sstream>

namespace neggen::prompts {

namespace {

std::string join(const std::vector<std::string>& items, const std::string& sep) {
    std::string out;
    for (size_t i = 0; i < items.size(); ++i) {
        if (i) out += sep;
        out += items[i];
    }
    return out;
}

}  // namespace

std::string extract_concepts(const std::string& text) {
    std::ostringstream p;
    p << "Find objects, attributes of objects, and relationships between objects "
         "in the given text. One word or phrase should only be one of objects, "
         "attributes and relationships.\n"
         "\n"
         "Provide the answer using the JSON format as,\n"
         "{\n"
         "\"text\": <the given text>,\n"
         "\"objects\": <list of objects in the given text>\n"
         "\"attributes\": <list of attributes in the given text>\n"
         "\"relationships\": <list of relationships in the given text>\n"
         "}\n"
         "\n"
         "Given text: "
      << text;
    return p.str();
}

std::string foil(const std::string& text, const std::vector<std::string>& phrases,
                 int negatives_per_phrase) {
    std::ostringstream p;
    p << "Given the positive text that refers to objects in an image, your task "
         "is to generate hard negative texts that do not refer to any objects in "
         "the image. A list of phrases in the positive text will be given. You "
         "need to replace each of phrases with other words to generate hard "
         "negative texts.\n"
         "\n"
         "Instructions:\n"
         "1. Choice one phrase from the given phrase list in a sequence.\n"
         "2. Find similar but different alternative concepts for the picked "
         "phrase.\n"
         "3. Choice one alternative to replace the phrase to generate a negative "
         "text. Keep other words intact as much as possible. Maintain the "
         "structure of the sentence. The resulting text should be coherent and "
         "satisfy common senses.\n"
         "4. For each phrase, generate at least "
      << negatives_per_phrase
      << " negative texts.\n"
         "5. Please provide the results in a JSON format as \n"
         "{\n"
         "\"positive_text\": <positive text>, \n"
         "\"results\": [\n"
         "{\n"
         "\"phrase\": <phrase >\n"
         "\"negative_texts\": [list of negatives texts by changing the phrase]\n"
         "}, ......\n"
         "{\n"
         "\"phrase\": <phrase >\n"
         "\"negative_texts\": [list of negatives texts by changing the phrase]\n"
         "},]}\n"
         "\n"
         "The input text: "
      << text << "\nPhrase list: " << join(phrases, ", ");
    return p.str();
}

std::string recombine(const std::string& text,
                      const std::vector<std::string>& phrases, int count) {
    std::ostringstream p;
    p << "You are asked to generate " << count
      << " sentences using a list of text phrases extracting from a main "
         "sentence.\n"
         "\n"
         "Here are the requirements:\n"
         "1. Be confident that the generated sentences should be semantically "
         "different from the main sentence.\n"
         "2. You need to keep at least one phrase intact\n"
         "3. You can either change one phrase to a closed but different "
         "concepts, e.g. \"man\" into \"woman\", \"dog\" into \"cat\". Or you "
         "can add new text phrases not in the list\n"
         "4. Focus on new relationships that are not in the main sentence\n"
         "5. Avoid general descriptive sentences because they may refer to the "
         "same object as the main sentence, e.g. \"book is helpful\"\n"
         "6. Keep the generated sentences simple\n"
         "\n"
         "The results should be in JSON format as\n"
         "{\n"
         "\"main\": <main sentence>,\n"
         "\"generated\": [<generated sentence>, ......, <generated sentence>]\n"
         "}\n"
         "\n"
         "Main sentence: "
      << text << "\nText phrase list: " << join(phrases, ", ");
    return p.str();
}

std::string summarize_pairs(const std::vector<NegativePair>& pairs) {
    std::ostringstream p;
    p << "Check the following pairs of the input text and its negative text.\n\n";
    for (const auto& pair : pairs) {
        p << "###\nInput text: " << pair.positive << "\nhard negative: " << pair.negative
          << "\n";
    }
    p << "###\n\nSummarize the features of those pairs.";
    return p.str();
}

std::string pair_completion(const std::string& summary,
                            const std::vector<NegativePair>& exemplars, int count) {
    std::ostringstream p;
    p << summary << "\n\nGenerate " << count
      << " pairs of input and hard negative.\n";
    int n = 0;
    for (const auto& pair : exemplars) {
        ++n;
        p << "###\n"
          << n << ". Input: " << pair.positive << "\n"
          << n << ". Negative: " << pair.negative << "\n";
    }
    p << "###\n" << (n + 1) << ". Input:";
    return p.str();
}

std::string pair_completion_for(const std::string& summary,
                                const std::vector<NegativePair>& exemplars,
                                const std::string& next_input, int count) {
    std::ostringstream p;
    p << summary << "\n\nGenerate " << count
      << " pairs of input and hard negative.\n";
    int n = 0;
    for (const auto& pair : exemplars) {
        ++n;
        p << "###\n"
          << n << ". Input: " << pair.positive << "\n"
          << n << ". Negative: " << pair.negative << "\n";
    }
    p << "###\n" << (n + 1) << ". Input: " << next_input << "\n" << (n + 1)
      << ". Negative:";
    return p.str();
}

std::string summarize_triplets(const std::vector<TripletSample>& triplets) {
    std::ostringstream p;
    p << "Check the following examples of an input text, a masked input, and an "
         "output text.\n\n";
    for (const auto& t : triplets) {
        p << "###\nInput text: " << t.positive << "\nMasked input: " << t.masked
          << "\nOutput: " << t.negative << "\n";
    }
    p << "###\n\nSummarize the features of those examples.";
    return p.str();
}

std::string triplet_completion(const std::string& summary,
                               const std::vector<TripletSample>& exemplars,
                               int count) {
    std::ostringstream p;
    p << summary << "\n\nGenerate " << count << " such examples\n";
    int n = 0;
    for (const auto& t : exemplars) {
        ++n;
        p << "###\n"
          << n << ". Input: " << t.positive << "\n"
          << n << ". Masked input: " << t.masked << "\n"
          << n << ". Output: " << t.negative << "\n";
    }
    p << "###\n" << (n + 1) << ". Input:";
    return p.str();
}

std::string fill_mask(const std::string& masked, const std::string& positive) {
    std::ostringstream p;
    p << "Generate 1 sentence by replacing [Mask] in \"" << masked
      << "\". The generated sentence should be different from \"" << positive
      << "\"";
    return p.str();
}

}  // namespace neggen::prompts
