/**
 * Assessment tab: the scoring form over the domain, class, control,
 * issue hierarchy. Every issue offers one radio per scale step labeled
 * from the taxonomy's own scale; picks autosave through the queue and
 * re-render from the server's merged sheet.
 */

import type { TaxonomyDoc, TaxonomyNodeDoc } from '../api.js';
import { ApiError, finalizeExperiment } from '../api.js';
import { el } from '../dom.js';
import { draftSheet, queueScore, savesSettled, store } from '../state.js';

function leafIdsUnder(node: TaxonomyNodeDoc): string[] {
  if (!node.children || node.children.length === 0) return [node.id];
  return node.children.flatMap(leafIdsUnder);
}

function namesById(taxonomy: TaxonomyDoc): Map<string, string> {
  const names = new Map<string, string>();
  const visit = (node: TaxonomyNodeDoc): void => {
    names.set(node.id, node.name);
    node.children?.forEach(visit);
  };
  taxonomy.domains.forEach(visit);
  return names;
}

function issueRow(issue: TaxonomyNodeDoc, taxonomy: TaxonomyDoc): HTMLElement {
  const draft = draftSheet(store.get());
  const { min, labels } = taxonomy.scale;
  const choices = labels.map((label, index) => {
    const value = min + index;
    const input = el('input', {
      type: 'radio',
      name: issue.id,
      value: String(value),
    });
    if (draft[issue.id] === value) input.setAttribute('checked', '');
    input.addEventListener('change', () => {
      queueScore(issue.id, value).catch((error) => {
        store.set({
          error:
            error instanceof ApiError
              ? `${error.code}: ${error.message}`
              : String(error),
        });
      });
    });
    return el('label', { class: 'choice' }, [input, `${value} = ${label}`]);
  });
  return el('div', { class: 'issue', 'data-issue': issue.id }, [
    el('p', { class: 'issue-text', text: issue.name }),
    el('div', { class: 'choices' }, choices),
  ]);
}

function controlBlock(
  control: TaxonomyNodeDoc,
  taxonomy: TaxonomyDoc,
): HTMLElement {
  const heading = control.iso_ref
    ? `${control.iso_ref} ${control.name}`
    : control.name;
  return el('div', { class: 'control' }, [
    el('h5', { text: heading }),
    ...(control.children ?? []).map((issue) => issueRow(issue, taxonomy)),
  ]);
}

function domainSection(
  domain: TaxonomyNodeDoc,
  taxonomy: TaxonomyDoc,
): HTMLElement {
  const leaves = leafIdsUnder(domain);
  const draft = draftSheet(store.get());
  const scored = leaves.filter((leaf) => leaf in draft).length;
  const blocks = (domain.children ?? []).map((child) =>
    child.kind === 'class'
      ? el('div', { class: 'class-group' }, [
          el('h4', { text: child.name }),
          ...(child.children ?? []).map((control) =>
            controlBlock(control, taxonomy),
          ),
        ])
      : controlBlock(child, taxonomy),
  );
  return el('section', { class: 'domain card', 'data-domain': domain.id }, [
    el('div', { class: 'domain-head' }, [
      el('h3', { text: domain.name }),
      el('span', {
        class: 'completion',
        text: `${scored}/${leaves.length} scored`,
      }),
    ]),
    ...blocks,
  ]);
}

function missingDialog(
  missingIds: string[],
  names: Map<string, string>,
): HTMLElement {
  const dialog = el('div', { class: 'modal', role: 'dialog' }, [
    el('h3', { text: 'Unscored issues' }),
    el('p', {
      text: 'Strict finalize needs every issue scored. Still missing:',
    }),
    el(
      'ul',
      { class: 'missing-list' },
      missingIds.map((id) =>
        el('li', { text: names.get(id) ? `${names.get(id)} (${id})` : id }),
      ),
    ),
  ]);
  const close = el('button', { text: 'Close' });
  close.addEventListener('click', () => dialog.remove());
  dialog.append(close);
  return dialog;
}

export function renderAssessment(root: HTMLElement): void {
  root.innerHTML = '';
  const state = store.get();
  const { taxonomy, experiment } = state;
  if (!taxonomy || !experiment) return;

  if (experiment.status === 'finalized') {
    root.append(
      el('section', { class: 'card' }, [
        el('p', {
          text: `Attempt ${experiment.attempt_number} is finalized. ` +
            'Open the Summarize tab for the result, or start a new attempt there.',
        }),
      ]),
    );
    return;
  }

  const allLeaves = taxonomy.domains.flatMap(leafIdsUnder);
  const scored = allLeaves.filter(
    (leaf) => leaf in draftSheet(state),
  ).length;

  const finalize = el('button', { id: 'finalize', text: 'Finalize attempt' });
  finalize.addEventListener('click', async () => {
    const current = store.get();
    if (!current.token || !current.experiment) return;
    try {
      await savesSettled();
      const done = await finalizeExperiment(
        current.token,
        current.experiment.id,
      );
      store.set({ experiment: done, tab: 'summarize', error: null });
    } catch (error) {
      if (
        error instanceof ApiError &&
        error.code === 'IncompleteAssessment' &&
        error.details &&
        typeof error.details === 'object'
      ) {
        const missing =
          (error.details as { missing_ids?: string[] }).missing_ids ?? [];
        root.append(missingDialog(missing, namesById(taxonomy)));
      } else {
        store.set({
          error:
            error instanceof ApiError
              ? `${error.code}: ${error.message}`
              : String(error),
        });
      }
    }
  });

  root.append(
    el('div', { class: 'toolbar' }, [
      el('span', {
        class: 'completion',
        id: 'overall-completion',
        text: `${scored}/${allLeaves.length} scored`,
      }),
      el('span', {
        class: 'attempt',
        text: `attempt ${experiment.attempt_number}`,
      }),
      finalize,
    ]),
    ...taxonomy.domains.map((domain) => domainSection(domain, taxonomy)),
  );
}
