import type {EntityJson, SchemaJson} from "../src/types.js";

export const OBJECT_SCHEMA: SchemaJson = {
  type: "Object",
  version: 1,
  root: {
    group: "Object", multiple: false, children: [
      {group: "ObjectIdentity", multiple: false, children: [
        {field: "ObjectName", kind: "text-plain", label: "Object name",
         multiple: false, required: true},
        {field: "Category", kind: "vocab-term", label: "Category",
         multiple: false, required: false, vocab: "object-category",
         mode: "static"},
        {field: "CreationProductionDate", kind: "time-expression",
         label: "Creation/Production date", multiple: false, required: false},
        {field: "CurrentLocation", kind: "entity-link", label: "Current location",
         multiple: false, required: false, targets: ["Location"]},
      ]},
      {group: "DetailedObjectDescription", multiple: false, children: [
        {group: "Measurement", multiple: true, children: [
          {group: "Dimension", multiple: true, children: [
            {field: "DimensionType", kind: "vocab-term", label: "Dimension type",
             multiple: false, required: false, vocab: "dimension-type",
             mode: "static"},
            {field: "DimensionValue", kind: "number", label: "Dimension value",
             multiple: false, required: false},
            {field: "Unit", kind: "vocab-term", label: "Unit",
             multiple: false, required: false, vocab: "unit", mode: "static"},
          ]},
        ]},
        {field: "OtherObjectNames", kind: "text-plain", label: "Other object names",
         multiple: true, required: false},
      ]},
      {group: "ObjectHistory", multiple: false, children: [
        {group: "Use", multiple: true, children: [
          {field: "UseName", kind: "text-plain", label: "Use name",
           multiple: false, required: false},
        ]},
      ]},
    ],
  },
  summaryColumns: ["ObjectIdentity/ObjectName", "ObjectIdentity/Category"],
  mapPointFields: ["ObjectIdentity/ObjectName"],
};

export function entity(values: EntityJson["values"],
                       overrides: Partial<EntityJson> = {}): EntityJson {
  return {
    id: "obj-000001",
    type: "Object",
    org: "org1",
    creator: "editor_a_org1",
    status: "unpublished",
    schemaVersion: 1,
    revision: 0,
    values,
    ...overrides,
  };
}

// three fixture cards with different filled-group shapes
export const CARD_NAME_ONLY = entity({
  "ObjectIdentity/ObjectName": {kind: "text", text: "Icon of St. Nicholas"},
});

export const CARD_WITH_MEASUREMENTS = entity({
  "ObjectIdentity/ObjectName": {kind: "text", text: "Measured icon"},
  "DetailedObjectDescription/Measurement[1]/Dimension[1]/DimensionValue":
    {kind: "number", value: "15"},
  "DetailedObjectDescription/Measurement[1]/Dimension[2]/DimensionValue":
    {kind: "number", value: "20"},
}, {id: "obj-000002"});

export const CARD_WITH_HISTORY = entity({
  "ObjectHistory/Use[1]/UseName": {kind: "text", text: "processional use"},
  "ObjectIdentity/CreationProductionDate":
    {kind: "time", expr: "ca. 1920", earliest: 1910, latest: 1930},
}, {id: "obj-000003"});
