import { trajectoryPaths } from "./chart.js";
import type { ConsoleController, ViewModel } from "./controller.js";

// DOM layer: paints the current ViewModel. Every number is printed straight
// from the server payload (single source of truth lives on the service).

const GEOM = { width: 640, height: 220, pad: 24 };

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function fmt(value: number | null | undefined): string {
  return value === null || value === undefined ? "—" : value.toFixed(3);
}

export function bindConsole(controller: ConsoleController): void {
  const poolSelect = el<HTMLSelectElement>("pool");
  const conceptSelect = el<HTMLSelectElement>("concept");
  const policySelect = el<HTMLSelectElement>("policy");
  const seedInput = el<HTMLInputElement>("seed");
  const maxLenInput = el<HTMLInputElement>("max-length");
  const seInput = el<HTMLInputElement>("se-threshold");
  const minLenInput = el<HTMLInputElement>("min-length");

  el<HTMLButtonElement>("start").addEventListener("click", () => {
    void controller.start({
      pool: poolSelect.value || undefined,
      concept: conceptSelect.value || null,
      policy: {
        kind: policySelect.value,
        seed: policySelect.value === "random" ? Number(seedInput.value || 0) : null,
      },
      rule: {
        max_length: Number(maxLenInput.value || 20),
        se_threshold: Number(seInput.value || 0.35),
        min_length: Number(minLenInput.value || 5),
      },
    });
  });
  el<HTMLButtonElement>("grade-correct").addEventListener("click", () => void controller.grade(1));
  el<HTMLButtonElement>("grade-incorrect").addEventListener("click", () => void controller.grade(0));
  el<HTMLButtonElement>("ask").addEventListener("click", () => void controller.fetchAnswer());
  el<HTMLTextAreaElement>("answer").addEventListener("input", (event) => {
    controller.setManualAnswer((event.target as HTMLTextAreaElement).value);
  });

  poolSelect.addEventListener("change", () => fillConcepts(controller.view, poolSelect, conceptSelect));
  controller.onChange = (view) => paint(view, { poolSelect, conceptSelect });
  void controller.loadPools();
}

function fillConcepts(view: ViewModel, poolSelect: HTMLSelectElement,
                      conceptSelect: HTMLSelectElement): void {
  const pool = view.pools.find((p) => p.name === poolSelect.value) ?? view.pools[0];
  conceptSelect.innerHTML = "";
  conceptSelect.append(new Option("all concepts", ""));
  for (const concept of Object.keys(pool?.concepts ?? {})) {
    conceptSelect.append(new Option(concept, concept));
  }
}

function paint(view: ViewModel,
               selects: { poolSelect: HTMLSelectElement; conceptSelect: HTMLSelectElement }): void {
  if (selects.poolSelect.options.length !== view.pools.length) {
    selects.poolSelect.innerHTML = "";
    for (const pool of view.pools) {
      selects.poolSelect.append(new Option(`${pool.name} (${pool.items} items)`, pool.name));
    }
    fillConcepts(view, selects.poolSelect, selects.conceptSelect);
  }

  el("setup-panel").hidden = view.phase !== "setup";
  el("test-panel").hidden = view.phase === "setup";
  el("report-panel").hidden = view.phase !== "finished";
  el("banner").textContent = view.banner;
  el("error").textContent = view.error ?? "";

  const session = view.session;
  el("question-id").textContent = session?.question?.id ?? "—";
  el("question-content").textContent =
    session?.question?.content ?? (session?.question ? "(no stored text; read it to the examinee)" : "");
  el("theta").textContent = fmt(session?.theta);
  el("se").textContent = fmt(session?.se);
  el("step").textContent = String(session?.step ?? 0);

  el<HTMLButtonElement>("grade-correct").disabled = !view.gradeEnabled;
  el<HTMLButtonElement>("grade-incorrect").disabled = !view.gradeEnabled;
  const answer = el<HTMLTextAreaElement>("answer");
  if (answer.value !== (view.answerText ?? "")) answer.value = view.answerText ?? "";

  const paths = trajectoryPaths(view.trajectory, GEOM);
  el("theta-path").setAttribute("d", paths.theta);
  el("se-path").setAttribute("d", paths.se);
  el("zero-line").setAttribute("y1", String(paths.zeroY));
  el("zero-line").setAttribute("y2", String(paths.zeroY));

  if (view.report) {
    el("report-table").textContent = view.report.table;
    el("rank-line").textContent = view.report.rank_line;
  }
}
