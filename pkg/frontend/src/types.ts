/** Mirrors of the API's response shapes. The UI never invents state:
 *  everything rendered comes from these objects plus transient input. */

export interface MaterialOut {
  id: string;
  title: string;
  source_label: string;
}

export interface ManifestOut {
  material_count: number;
  pool_counts_by_subject: Record<string, number>;
  provider_tag: string;
}

export interface CorpusOut {
  manifest: ManifestOut;
  materials: MaterialOut[];
  subjects: string[];
}

export interface ReviewOut {
  rating: number;
  critique: string;
  relevance_flag: boolean;
  accuracy_flag: boolean;
}

export interface ElementLinkOut {
  kind: string;
  excerpt: string;
  connection: string;
}

export interface TextCardOut {
  card_id: string;
  parent_context_card: string;
  material_id: string;
  material_title: string;
  state: string;
  content: string;
  overall: string;
  element_links: ElementLinkOut[];
  review: ReviewOut | null;
  warnings: string[];
  qa_thread: [string, string][];
  user_edited: boolean;
}

export interface ContextCardOut {
  card_id: string;
  entry_id: string;
  title: string;
  subject: string;
  background: string;
  description: string;
  relevant_material_titles: string[];
  state: string;
  error: string;
  qa_thread: [string, string][];
  user_edited: boolean;
  text_cards: TextCardOut[];
}

export interface CollectionEntryOut {
  context_card_id: string;
  starred_text_card_ids: string[];
}

export interface ActivityOut {
  title: string;
  description: string;
  kind: string;
}

export interface OutcomeOut {
  context_card_id: string;
  expected_lesson_count: number;
  plan_text: string;
  introduction: string;
  activities: ActivityOut[];
  warnings: string[];
}

export interface SessionOut {
  session_id: string;
  subjects: string[];
  material_ids: string[];
  content_language: string;
  context_cards: ContextCardOut[];
  collection: CollectionEntryOut[];
  outcome: OutcomeOut | null;
}

export interface JobOut {
  job_id: string;
  status: "pending" | "done" | "failed";
  result: Record<string, unknown> | null;
  error: { code: string; message: string } | null;
}

export interface ApiErrorBody {
  code: string;
  message: string;
  detail?: unknown;
}

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}
