"""Bundled relation definitions for the definition-text similarity analysis.

These are the official glossary entries for the 33 documented ("main")
ConceptNet 5 relations, as published on the project wiki
(https://github.com/commonsense/conceptnet5/wiki/Relations). Users can
substitute their own corpus; this one is the default.
"""

CONCEPTNET_RELATION_DEFINITIONS: dict[str, str] = {
    "RelatedTo": (
        "The most general relation. There is some positive relationship "
        "between A and B, but ConceptNet can't determine what that "
        "relationship is based on the data. This was called "
        '"ConceptuallyRelatedTo" in ConceptNet 2 through 4. Symmetric.'
    ),
    "FormOf": "A is an inflected form of B; B is the root word of A.",
    "IsA": (
        "A is a subtype or a specific instance of B; every A is a B. This "
        "can include specific instances; the distinction between subtypes "
        "and instances is often blurry in language. This is the hyponym "
        "relation in WordNet."
    ),
    "PartOf": "A is a part of B. This is the part meronym relation in WordNet.",
    "HasA": (
        "B belongs to A, either as an inherent part or due to a social "
        "construct of possession. HasA is often the reverse of PartOf."
    ),
    "UsedFor": "A is used for B; the purpose of A is B.",
    "CapableOf": "Something that A can typically do is B.",
    "AtLocation": (
        "A is a typical location for B, or A is the inherent location of B. "
        "Some instances of this would be considered meronyms in WordNet."
    ),
    "Causes": "A and B are events, and it is typical for A to cause B.",
    "HasSubevent": "A and B are events, and B happens as a subevent of A.",
    "HasFirstSubevent": "A is an event that begins with subevent B.",
    "HasLastSubevent": "A is an event that concludes with subevent B.",
    "HasPrerequisite": (
        "In order for A to happen, B needs to happen; B is a dependency of A."
    ),
    "HasProperty": "A has B as a property; A can be described as B.",
    "MotivatedByGoal": (
        "Someone does A because they want result B; A is a step toward "
        "accomplishing the goal B."
    ),
    "ObstructedBy": (
        "A is a goal that can be prevented by B; B is an obstacle in the "
        "way of A."
    ),
    "Desires": (
        "A is a conscious entity that typically wants B. Many assertions of "
        'this type use the appropriate language\'s word for "person" as A.'
    ),
    "CreatedBy": "B is a process or agent that creates A.",
    "Synonym": (
        "A and B have very similar meanings. They may be translations of "
        "each other in different languages. This is the synonym relation in "
        "WordNet as well. Symmetric."
    ),
    "Antonym": (
        "A and B are opposites in some relevant way, such as being opposite "
        "ends of a scale, or fundamentally similar things with a key "
        "difference between them. Counterintuitively, two concepts must be "
        "quite similar before people consider them antonyms. This is the "
        "antonym relation in WordNet as well. Symmetric."
    ),
    "DistinctFrom": (
        "A and B are distinct member of a set; something that is A is not B. "
        "Symmetric."
    ),
    "DerivedFrom": (
        "A is a word or phrase that appears within B and contributes to B's "
        "meaning."
    ),
    "SymbolOf": "A symbolically represents B.",
    "DefinedAs": (
        "A and B overlap considerably in meaning, and B is a more "
        "explanatory version of A."
    ),
    "MannerOf": (
        'A is a specific way to do B. Similar to "IsA", but for verbs.'
    ),
    "LocatedNear": "A and B are typically found near each other. Symmetric.",
    "HasContext": (
        "A is a word used in the context of B, which could be a topic area, "
        "technical field, or regional dialect."
    ),
    "SimilarTo": "A is similar to B. Symmetric.",
    "EtymologicallyRelatedTo": "A and B have a common origin. Symmetric.",
    "EtymologicallyDerivedFrom": "A is derived from B.",
    "CausesDesire": "A makes someone want B.",
    "MadeOf": "A is made of B.",
    "ReceivesAction": "B can be done to A.",
}
